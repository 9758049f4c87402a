#!/usr/bin/env python3
"""
Motivic May spectral sequence
Run with: python run_may.py compute --profile motivic
"""

import sys

from motivic_may.main import main

if __name__ == "__main__":
    print("Motivic May spectral sequence", file=sys.stderr)
    print("=" * 50, file=sys.stderr)
    sys.exit(main())
