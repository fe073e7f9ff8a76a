"""Topic layout: one topic per addressable unit.

Cloud side (console <-> hub): scope/<device_id>/cmd, scope/<device_id>/shadow.
Local bus (hub <-> nodes):    well/<WellId>/cmd, well/<WellId>/evt.
Peripheral traffic rides its own serial-style line channel, but the names
below are reserved for deployments that bridge it onto the bus.
"""

from __future__ import annotations

from .wells import WellId

PERIPH_CMD_TOPIC = "periph/cmd"
PERIPH_EVT_TOPIC = "periph/evt"


def cloud_cmd_topic(device_id: str) -> str:
    return f"scope/{device_id}/cmd"


def cloud_shadow_topic(device_id: str) -> str:
    return f"scope/{device_id}/shadow"


def well_cmd_topic(well: WellId) -> str:
    return f"well/{well}/cmd"


def well_evt_topic(well: WellId) -> str:
    return f"well/{well}/evt"
