"""Allow running the command line interface as ``python -m activegames``."""

from .cli import main

if __name__ == "__main__":
    main()
