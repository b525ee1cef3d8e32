"""
Entry point of the competition harness.

    python app.py synth --workdir work
    python app.py rank --submission teamA=team_a.xtsb --excel

See ``harness.cli`` for the stages and their artifacts.
"""
import sys

from harness.cli import main

if __name__ == "__main__":
    sys.exit(main())
