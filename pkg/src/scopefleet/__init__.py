"""Fleet orchestration for a 24-camera well-plate microscope.

Subpackages:
  protocol       message types, config validation, wire codec
  hub            capture state machine, transfer queue, command handling
  camera_node    per-well simulated camera agent and synthetic scene renderer
  peripheral_sim motor/light/temperature controller emulator
  storage        object-store client, manifest authority, local store stub
  postproc       focus stacking and timelapse pipeline
  fleetctl       topology launcher, scenario runner, trace audits
  runtime        event scheduler, clocks, message bus, shared-uplink model
"""

__version__ = "0.1.0"
