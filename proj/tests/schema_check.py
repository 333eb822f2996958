"""Validate JSON documents against the shipped schemas.

Input (stdin): one document per line, "<schema file>\t<json>".
Prints one line per invalid document and exits 1 if any failed.
"""
import json
import sys
from pathlib import Path

import jsonschema


def main() -> int:
    schema_dir = Path(sys.argv[1])
    validators = {}
    failures = 0
    checked = 0
    for line in sys.stdin:
        line = line.rstrip("\n")
        if not line:
            continue
        name, doc = line.split("\t", 1)
        if name not in validators:
            schema = json.loads((schema_dir / name).read_text())
            cls = jsonschema.validators.validator_for(schema)
            cls.check_schema(schema)
            validators[name] = cls(schema)
        errors = list(validators[name].iter_errors(json.loads(doc)))
        checked += 1
        for e in errors:
            failures += 1
            print(f"{name}: {e.message} at {list(e.absolute_path)}")
    print(f"checked {checked} documents, {failures} errors")
    return 1 if failures or checked == 0 else 0


if __name__ == "__main__":
    sys.exit(main())
