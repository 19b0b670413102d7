"""Entry point for ``python main.py``; same as the ``llnsim`` script."""

from llnsim.cli import main

if __name__ == "__main__":
    main()
