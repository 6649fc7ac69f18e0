import sys
from pathlib import Path

# Tests import the local oracle/fixture helpers directly.
sys.path.insert(0, str(Path(__file__).parent))
