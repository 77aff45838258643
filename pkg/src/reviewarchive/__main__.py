"""``python -m reviewarchive`` runs the command-line tool."""

from .cli import main

main()
