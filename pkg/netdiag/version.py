"""
Version determination functions

These are in their own file so they can be imported by setup.py before we have
any of our dependencies installed.
"""
import os.path
import subprocess


__VERSION__ = "0.3"
PACKAGED_VERSION = "@@PACKAGED_VERSION@@"


def get_version(_args=None) -> str:
    """Return the packaged version as a string

    Prefer the PACKAGED_VERSION substituted at build time. In a git checkout
    `git describe --long` gives XX.Y-N-gSHA so daily builds can count the
    commit offset from the last XX.Y tag.
    """
    if not PACKAGED_VERSION.startswith("@@PACKAGED_VERSION"):
        return PACKAGED_VERSION
    topdir = os.path.dirname(os.path.dirname(__file__))
    if os.path.exists(os.path.join(topdir, ".git")):
        cmd = ["git", "describe", "--abbrev=8", "--match=[0-9]*", "--long"]
        try:
            out = subprocess.check_output(
                cmd, cwd=topdir, stderr=subprocess.DEVNULL
            )
            return out.decode("utf-8").strip()
        except (OSError, subprocess.CalledProcessError):
            pass
    return __VERSION__
