# Stratalign Package
