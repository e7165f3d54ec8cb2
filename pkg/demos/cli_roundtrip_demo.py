"""Drive the command line front end programmatically.

Writes a kernel and prior to disk in the plain-text format, audits the
pair with a claimed-level check, and calibrates a demand with JSON
output.  Exit codes follow the usual convention: 0 success, 1 bad
configuration, 2 unreadable path, 3 failed check.
"""

import tempfile
from pathlib import Path

from bcdp import (masked_table_mechanism, product_prior, write_kernel,
                  write_prior)
from bcdp.cli import cli_entry


def main():
    with tempfile.TemporaryDirectory() as tmp:
        kernel_path = str(Path(tmp) / "masked.kernel")
        prior_path = str(Path(tmp) / "fair.prior")
        write_kernel(masked_table_mechanism(0.5, 0.5, 0.5), kernel_path)
        write_prior(product_prior([(0.5, 0.5), (0.5, 0.5)]), prior_path)

        print("audit with a passing claim (log 2 per coordinate):")
        code = cli_entry(["audit", "--kernel", kernel_path,
                          "--prior", prior_path,
                          "--check", "0.6931472,0.6931472"])
        print(f"exit code {code}\n")

        print("audit with a failing claim:")
        code = cli_entry(["audit", "--kernel", kernel_path,
                          "--prior", prior_path, "--check", "0.5,0.5"])
        print(f"exit code {code}\n")

        print("calibrate, machine readable:")
        code = cli_entry(["calibrate", "--epsilon", "2.0",
                          "--delta", "0.2,0.2,2,2,2", "--q", "0.25",
                          "--json"])
        print(f"exit code {code}")


if __name__ == "__main__":
    main()
