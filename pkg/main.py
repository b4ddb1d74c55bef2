"""
Main entry point for Stratalign
"""

import sys
from pathlib import Path

# Add src to Python path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from src.pipeline.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
