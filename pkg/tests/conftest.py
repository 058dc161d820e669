import sys
from pathlib import Path

# Make `helpers` / `oracles.*` importable regardless of where pytest runs.
sys.path.insert(0, str(Path(__file__).resolve().parent))

FIXTURES = Path(__file__).resolve().parent / "fixtures"
