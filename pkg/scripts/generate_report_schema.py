import json
import sys
from pathlib import Path

from semifield_forge.reports import report_schema

DEFAULT_PATH = Path(__file__).resolve().parent.parent / "report_schema.json"


def generate_report_schema(path: Path = DEFAULT_PATH) -> None:
    path.write_text(json.dumps(report_schema(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    generate_report_schema(Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_PATH)
