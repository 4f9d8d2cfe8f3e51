import io
import logging
import mock

import pytest

from netdiag.config import NetDiagConfig
from netdiag.graph import build_model
from netdiag.templates import TemplateProfile
from netdiag.testing import data
from netdiag.topology import interpret, parse_dialect

from typing import Any, Dict, Optional  # noqa: F401


@pytest.fixture
def caplog_text(request):
    """
    A fixture that returns a function that returns caplog.text

    (It returns a function so that the requester can decide when to examine the
    logs; if it returned caplog.text directly, that would always be empty.)
    """
    log_level = getattr(request, "param", logging.INFO)
    try:
        caplog = request.getfixturevalue("caplog")
        caplog.set_level(log_level)

        def _func():
            return caplog.text

    except LookupError:
        # If the caplog fixture isn't available, shim something in ourselves
        root = logging.getLogger()
        root.setLevel(log_level)
        handler = logging.StreamHandler(io.StringIO())
        handler.setFormatter(
            logging.Formatter(
                "%(filename)-25s %(lineno)4d %(levelname)-8s %(message)s"
            )
        )
        root.addHandler(handler)

        def _func():
            return handler.stream.getvalue()

        def clear_handlers():
            logging.root.handlers = []

        request.addfinalizer(clear_handlers)
    return _func


@pytest.fixture
def logging_sandbox():
    # Monkeypatch a replacement root logger, so that our changes to logging
    # configuration don't persist outside of the test
    root_logger = logging.RootLogger(logging.WARNING)

    with mock.patch.object(logging, "root", root_logger):
        with mock.patch.object(logging.Logger, "root", root_logger):
            with mock.patch.object(
                logging.Logger, "manager", logging.Manager(root_logger)
            ):
                yield


@pytest.fixture
def FakeConfig(tmpdir):
    class _FakeConfig(NetDiagConfig):
        def __init__(self, cfg_override=None) -> None:
            cfg = {
                "log_file": tmpdir.join("netdiag.log").strpath
            }  # type: Dict[str, Any]
            if cfg_override:
                cfg.update(cfg_override)
            super().__init__(cfg)

    return _FakeConfig


@pytest.fixture
def sample_oob():
    """Out-of-band network: two switches, each with a host."""
    return interpret(
        parse_dialect(data.encode(data.SAMPLE_OOB_NATIVE), "native")
    )


@pytest.fixture
def sample_inband():
    """In-band variant of sample_oob: only the first switch is controlled."""
    return interpret(
        parse_dialect(data.encode(data.SAMPLE_INBAND_NATIVE), "native")
    )


@pytest.fixture
def sample_oob_model(sample_oob):
    return build_model(*sample_oob, profile=TemplateProfile.degree_adaptive())
