import os.path
import subprocess

import mock
import pytest

from netdiag.version import __VERSION__, get_version

GIT_DESCRIBE = ["git", "describe", "--abbrev=8", "--match=[0-9]*", "--long"]
TOP_DIR = os.path.dirname(os.path.dirname(os.path.dirname(__file__)))


@mock.patch("netdiag.version.subprocess.check_output")
class TestGetVersion:
    @mock.patch("netdiag.version.os.path.exists", return_value=True)
    def test_get_version_returns_packaged_version(
        self, m_exists, m_check_output
    ):
        with mock.patch("netdiag.version.PACKAGED_VERSION", "0.3~22.04.1"):
            assert "0.3~22.04.1" == get_version()
        assert 0 == m_check_output.call_count

    @mock.patch("netdiag.version.os.path.exists", return_value=True)
    def test_get_version_returns_matching_git_describe_long(
        self, m_exists, m_check_output
    ):
        m_check_output.return_value = b"0.3-5-g12345678\n"
        with mock.patch(
            "netdiag.version.PACKAGED_VERSION", "@@PACKAGED_VERSION"
        ):
            assert "0.3-5-g12345678" == get_version()
        assert [
            mock.call(
                GIT_DESCRIBE, cwd=TOP_DIR, stderr=subprocess.DEVNULL
            )
        ] == m_check_output.call_args_list
        assert [
            mock.call(os.path.join(TOP_DIR, ".git"))
        ] == m_exists.call_args_list

    @pytest.mark.parametrize(
        "exception",
        (
            subprocess.CalledProcessError(128, GIT_DESCRIBE),
            OSError("git: not found"),
        ),
    )
    @mock.patch("netdiag.version.PACKAGED_VERSION", "@@PACKAGED_VERSION")
    @mock.patch("netdiag.version.os.path.exists", return_value=True)
    def test_falls_back_when_git_describe_fails(
        self, m_exists, m_check_output, exception
    ):
        m_check_output.side_effect = exception
        assert __VERSION__ == get_version()

    @mock.patch("netdiag.version.PACKAGED_VERSION", "@@PACKAGED_VERSION")
    @mock.patch("netdiag.version.os.path.exists", return_value=False)
    def test_no_git_checkout(self, m_exists, m_check_output):
        assert __VERSION__ == get_version()
        assert 0 == m_check_output.call_count
