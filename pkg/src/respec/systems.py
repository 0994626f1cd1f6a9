"""Built-in example systems: a ticket-booking chain and an online-gifting
chain with its weighted requirement set.  Used by the demos and tests and
available to the CLI as parse-ready sources."""

from __future__ import annotations

from .lts import Mlts, parse_mlts
from .requirements import Requirement, parse_requirements
from .selection import OrderLint

TICKET_BOOKING_SOURCE = """\
system TicketBooking
agents u mu
module m0:
  forward transport
module m1:
  forward ID
module m2:
  forward password
  backward back
module m3:
  forward dest
module m4:
  forward time
  backward back
module m5:
  forward seat
  backward back
module m6:
  forward confirm
  module reselect -> dest
  state reset -> 0
"""


def ticket_booking() -> Mlts:
    """Seven-module booking chain: transport, ID, password, destination,
    departure time, seat, confirmation; back on the password/time/seat
    screens, reselect jumping to the destination module, reset to start."""
    return parse_mlts(TICKET_BOOKING_SOURCE)


GIFTING_SOURCE = """\
system OnlineGifting
agents u mu
module m0:
  forward login
  state reset -> 0
module m1:
  forward select
module m2:
  forward charge
module m3:
  forward gift
  backward back
module m4:
  forward pay
  backward back
module m5:
  forward confirm
module m6:
  forward logout
"""


def online_gifting() -> Mlts:
    """Seven-module gifting chain: login, receiver selection, charge, gift
    choice, payment, confirmation, logout.  The gift and payment screens
    offer back; the login screen offers a reset that abandons the whole
    flow.  This placement keeps the original chain functionally sound
    (no re-login after charging, no re-charge after paying) while leaving
    it insecure once a second agent can take over the machine.
    """
    return parse_mlts(GIFTING_SOURCE)


GIFTING_REQUIREMENTS_SOURCE = """\
# Security requirements: constrain what a second agent may do after the
# user acted.  Functional requirements: constrain the machine's own order.
req SR1 kind=security weight=4: G(u.select -> G(!mu.select))
req SR2 kind=security weight=4: G(u.charge -> G(!(mu.back && X mu.charge)))
req SR3 kind=security weight=3: G(u.gift -> G(!mu.gift))
req FR1 kind=functional weight=3: G(charge -> G(!login))
req FR2 kind=functional weight=2: G(pay -> G(!charge))
req FR3 kind=functional weight=1: G(select -> (!confirm W gift))
"""

# SR2 as printed in its original source reads with the inner implication
# inverted; checked literally it rejects every revision.  The working set
# above uses the prose reading; the literal variant stays available for
# comparison.
GIFTING_SR2_LITERAL_SOURCE = (
    "req SR2lit kind=security weight=4: G(u.charge -> G(!mu.back -> X mu.charge))\n"
)


def gifting_requirements() -> list[Requirement]:
    return parse_requirements(GIFTING_REQUIREMENTS_SOURCE)


def gifting_sr2_literal() -> Requirement:
    return parse_requirements(GIFTING_SR2_LITERAL_SOURCE)[0]


GIFTING_LINTS_SOURCE = """\
lint pay-after-logout: pay after logout
lint confirm-before-select: select after confirm
"""


def gifting_lints() -> list[OrderLint]:
    from .selection import parse_lints

    return parse_lints(GIFTING_LINTS_SOURCE)
