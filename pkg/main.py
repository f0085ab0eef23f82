#!/usr/bin/env python3
"""
Gas Network Petrov-Galerkin Simulator
Main entry point for the command line front end

Usage:
    python main.py simulate --scenario scenarios/network_linear.scn --out results
    python main.py steady   --scenario scenarios/network_linear.scn --out results
    python main.py converge --model linear --levels 5 --out results

Exit codes: 0 ok, 2 usage or input file errors, 3 invalid network or discretization,
4 solver failure, 1 unexpected error.
"""

import sys
import os

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import EXIT_CODES, MESSAGES


def check_dependencies():
    """Check if required dependencies are installed"""
    required_modules = ['numpy', 'scipy', 'networkx', 'dotenv']
    missing_modules = []

    for module in required_modules:
        try:
            __import__(module)
        except ImportError:
            missing_modules.append(module)

    if missing_modules:
        print("❌ Missing required dependencies:", file=sys.stderr)
        for module in missing_modules:
            print(f"   • {module}", file=sys.stderr)
        print("\n💡 Install dependencies with:", file=sys.stderr)
        print("   pip install -r requirements.txt", file=sys.stderr)
        return False

    return True


def main(argv=None):
    """Main entry point for the application"""
    try:
        if not check_dependencies():
            sys.exit(EXIT_CODES['UNEXPECTED'])

        from cli import run
        sys.exit(run(argv))

    except KeyboardInterrupt:
        print(f"\n{MESSAGES['interrupted']}", file=sys.stderr)
        sys.exit(EXIT_CODES['UNEXPECTED'])

    except ImportError as e:
        print(f"❌ Import error: {e}", file=sys.stderr)
        print("\n💡 Make sure you're running from the project root directory:", file=sys.stderr)
        print("   python main.py --help", file=sys.stderr)
        sys.exit(EXIT_CODES['UNEXPECTED'])

    except Exception as e:
        print(f"💥 Fatal error: {e}", file=sys.stderr)
        print("\n🐛 This is unexpected. Please report this error.", file=sys.stderr)
        sys.exit(EXIT_CODES['UNEXPECTED'])


if __name__ == "__main__":
    main()
