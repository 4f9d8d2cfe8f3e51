import socket
from urllib import error

from netdiag import config
from netdiag import util
from netdiag import version

from typing import Optional  # noqa: F401


class TopologyClient:
    """Retrieve topology documents from a controller's northbound API.

    Only plain GET is supported; the response body is returned undecoded so
    the dialect parser sees exactly the bytes a file would hold.
    """

    def __init__(self, cfg: "Optional[config.NetDiagConfig]" = None) -> None:
        if not cfg:
            self.cfg = config.NetDiagConfig()
        else:
            self.cfg = cfg

    @property
    def url_timeout(self) -> int:
        return self.cfg.url_timeout

    def headers(self):
        return {
            "user-agent": "netdiag/{}".format(version.get_version()),
            "accept": "application/json",
        }

    def fetch(self, url: str) -> bytes:
        try:
            content, _headers = util.readurl(
                url=url, headers=self.headers(), timeout=self.url_timeout
            )
        except (error.URLError, socket.timeout, ConnectionError) as e:
            raise util.UrlError(
                e,
                code=getattr(e, "code", None),
                headers=getattr(e, "headers", None),
                url=url,
            )
        return content
