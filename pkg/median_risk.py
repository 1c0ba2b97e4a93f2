#!/usr/bin/env python3
from median_risk.__main__ import main


if __name__ == "__main__":
    raise SystemExit(main())
