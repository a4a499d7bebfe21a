#!/usr/bin/env python3
"""Prepend the Apache-2.0 header to project sources that lack it."""

import pathlib
import sys

HEADER = """Copyright 2026 The viplab Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License."""

STYLES = {
    ".cpp": "//", ".hpp": "//", ".h": "//",
    ".py": "#", ".cmake": "#", ".txt": "#",
}
DIRS = ["include", "src", "tools", "tests", "scripts"]
MARKER = "Licensed under the Apache License"


def commented(prefix: str) -> str:
    return "\n".join(f"{prefix} {line}".rstrip() for line in HEADER.splitlines()) + "\n\n"


def wants_header(path: pathlib.Path) -> bool:
    if path.suffix == ".txt":
        return path.name == "CMakeLists.txt"
    return path.suffix in STYLES


def main() -> int:
    root = pathlib.Path(__file__).resolve().parent.parent
    files = [root / "CMakeLists.txt"]
    for d in DIRS:
        files += sorted(p for p in (root / d).rglob("*") if p.is_file() and wants_header(p))
    changed = 0
    for path in files:
        text = path.read_text()
        if MARKER in text[:2000]:
            continue
        block = commented(STYLES[path.suffix])
        if text.startswith("#!"):
            first, _, rest = text.partition("\n")
            text = first + "\n" + block + rest
        else:
            text = block + text
        path.write_text(text)
        changed += 1
    print(f"headers added to {changed} of {len(files)} files")
    return 0


if __name__ == "__main__":
    sys.exit(main())
