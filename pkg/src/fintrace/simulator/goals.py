"""Behavior profiles and dynamic goal generation.

A profile is a weighted menu of everyday customer goals plus, for the
criminal profile, a money-laundering pipeline. Pipeline goals follow
placement -> layering -> integration, driven by the unobservable state
flags: no dirty money and no laundering in progress means a new crime;
dirty money on hand means placement; placed-but-unlayered funds trigger
layering; an open laundering flag with nothing left to place triggers
integration. Criminals interleave everyday goals between pipeline goals
so their traces do not consist of laundering alone.

Goal generation may create fresh objects (sellers, bills, accounts,
foreign beneficiaries) and inject their supporting literals directly
into the state; the observer sees those literals appear in the next
step's delta.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from ..errors import PlanningError
from ..model import Literal, as_number
from .domainfile import Comparison, PlanTemplate, load_plan_library
from .statespace import SimState

CUSTOMER = "c1"
HOME_COUNTRY = "country-home"

Check = tuple


@dataclass(frozen=True, slots=True)
class AmountRanges:
    """Money ranges (integer currency units) used by the goal binders."""

    wage: tuple[int, int] = (1200, 3000)
    savings: tuple[int, int] = (100, 900)
    bill: tuple[int, int] = (60, 400)
    product: tuple[int, int] = (300, 2400)
    service: tuple[int, int] = (80, 600)
    friend_payment: tuple[int, int] = (50, 500)
    self_transfer: tuple[int, int] = (200, 1500)
    crime_income: tuple[int, int] = (24000, 38000)
    structuring_chunk: tuple[int, int] = (5500, 9500)
    withdraw_small: tuple[int, int] = (100, 600)
    digital_topup: tuple[int, int] = (200, 1200)
    transfer_small: tuple[int, int] = (100, 800)
    integration_share: tuple[float, float] = (0.6, 0.9)


@dataclass(frozen=True, slots=True)
class BehaviorProfile:
    """One agent class: goal menu, strategy distributions, label."""

    label: str
    menu: tuple[tuple[str, float], ...]
    pipeline: bool = False
    pipeline_share: float = 0.7
    placement_mode: str = "random"  # cash | digital | random
    integration_mode: str = "random"  # withdraw | bills | abroad | random
    layering_hops: tuple[int, int] = (1, 3)
    structuring_threshold: int = 10_000
    mark_banned_destination: bool = True
    create_company: bool = False
    ranges: AmountRanges = AmountRanges()


_BASE_MENU = (
    ("collect-wages", 0.28),
    ("save-cash", 0.20),
    ("pay-bills", 0.18),
    ("buy-product", 0.12),
    ("use-service", 0.10),
    ("pay-friend", 0.07),
    ("move-savings", 0.05),
)

_DIVERSE_EXTRAS = (
    ("open-company", 0.10),
    ("withdraw-cash", 0.09),
    ("digital-topup", 0.08),
    ("transfer-out", 0.08),
    ("transfer-abroad", 0.06),
)

_CRIMINAL_MENU = (
    ("buy-product", 0.45),
    ("use-service", 0.35),
    ("pay-bills", 0.20),
)


def standard_profile(create_company: bool = False) -> BehaviorProfile:
    """Everyday customer. With ``create_company`` the menu also includes
    companies, withdrawals, digital top-ups, and transfers, which makes
    the two classes share their observable vocabulary."""
    menu = _BASE_MENU + (_DIVERSE_EXTRAS if create_company else ())
    return BehaviorProfile("good", menu=menu, create_company=create_company)


def criminal_profile(placement: str = "random", integration: str = "random",
                     diverse: bool = False) -> BehaviorProfile:
    """Money launderer. ``diverse`` widens the interleaved everyday menu
    to the full standard one (jobs included) and stops marking foreign
    destinations as banned, mirroring the diverse standard profile."""
    if diverse:
        menu = (("get-job", 0.15),) + _BASE_MENU + _DIVERSE_EXTRAS
    else:
        menu = _CRIMINAL_MENU
    return BehaviorProfile(
        "bad",
        menu=menu,
        pipeline=True,
        placement_mode=placement,
        integration_mode=integration,
        mark_banned_destination=not diverse,
        create_company=diverse,
    )


@dataclass(frozen=True, slots=True)
class Goal:
    """A grounded goal: template kind, constant bindings, success checks."""

    kind: str
    bindings: Mapping[str, object]
    tags: frozenset[str] = frozenset()
    priority: bool = False
    condition: tuple[Check, ...] = ()


@dataclass(frozen=True, slots=True)
class GoalEvent:
    goal: Goal | None
    new_objects: tuple[str, ...] = ()
    literals: tuple[Literal, ...] = ()


def check_holds(check: Check, state: SimState) -> bool:
    if check[0] == "lit":
        return state.has(check[1], check[2])
    _, name, args, op, target = check
    value = state.value(name, args)
    if value is None:
        return False
    return {
        ">=": value >= target,
        "<=": value <= target,
        "=": value == target,
        ">": value > target,
        "<": value < target,
    }[op]


def goal_satisfied(goal: Goal, state: SimState) -> bool:
    return all(check_holds(c, state) for c in goal.condition)


def _ground_condition(template: PlanTemplate, bindings: Mapping[str, object]) -> tuple[Check, ...]:
    checks: list[Check] = []
    for cond in template.achieves:
        if isinstance(cond, Comparison):
            args = tuple(str(bindings[p]) for p in cond.func.params)
            if cond.term.kind == "number":
                target = cond.term.number
            elif cond.term.kind == "param":
                target = as_number(str(bindings[cond.term.param]))
            else:
                raise PlanningError(f"{template.kind}: achieves cannot reference functions")
            checks.append(("cmp", cond.func.name, args, cond.op, target))
        else:
            args = tuple(str(bindings[p]) for p in cond.params)
            checks.append(("lit", cond.name, args))
    return tuple(checks)


class GoalGenerator:
    """Per-simulation goal source; owns the rng draws and object naming."""

    def __init__(self, profile: BehaviorProfile, goal_prob: float, rng: random.Random,
                 library: dict[str, PlanTemplate] | None = None):
        if not 0.0 <= goal_prob <= 1.0:
            raise ValueError("goal probability must be in [0, 1]")
        self.profile = profile
        self.p = goal_prob
        self.rng = rng
        self.library = library or load_plan_library()
        self.c = CUSTOMER
        self.event_count = 0
        self._counters: dict[str, int] = {}
        self._new_objects: list[str] = []
        # object registry
        self.personal_accounts: list[str] = []
        self.company: str | None = None
        self.company_account: str | None = None
        self.accomplice: str | None = None
        self.hop_accounts: list[str] = []
        self.card_granted = False
        self.std_wallet: str | None = None
        self.cycle = 0

        self._binders: dict[str, Callable[[SimState], tuple[Goal, list[Literal]] | None]] = {
            "open-account": self._bind_open_account,
            "get-job": self._bind_get_job,
            "collect-wages": self._bind_collect_wages,
            "save-cash": self._bind_save_cash,
            "pay-bills": self._bind_pay_bills,
            "buy-product": self._bind_buy_product,
            "use-service": self._bind_use_service,
            "pay-friend": self._bind_pay_friend,
            "move-savings": self._bind_move_savings,
            "open-company": self._bind_open_company,
            "withdraw-cash": self._bind_withdraw_cash,
            "digital-topup": self._bind_digital_topup,
            "transfer-out": self._bind_transfer_out,
            "transfer-abroad": self._bind_transfer_abroad,
        }

    # -- naming ---------------------------------------------------------------

    def _fresh(self, prefix: str) -> str:
        self._counters[prefix] = self._counters.get(prefix, 0) + 1
        name = f"{prefix}-{self._counters[prefix]}"
        self._new_objects.append(name)
        return name

    def _goal(self, kind: str, bindings: dict, *, tags: frozenset[str] = frozenset(),
              priority: bool = False) -> Goal:
        condition = _ground_condition(self.library[kind], bindings)
        return Goal(kind, bindings, tags=tags, priority=priority, condition=condition)

    # -- event entry point ----------------------------------------------------

    def generate(self, projection: SimState, queued_kinds: frozenset[str] = frozenset()) -> GoalEvent:
        """With probability p, emit one goal plus its supporting literals."""
        if self.rng.random() >= self.p:
            return GoalEvent(None)
        self.event_count += 1
        self._new_objects = []
        if self.profile.pipeline:
            result = self._criminal_event(projection, queued_kinds)
        else:
            result = self._standard_event(projection, queued_kinds)
        if result is None:
            return GoalEvent(None, tuple(self._new_objects))
        goal, literals = result
        return GoalEvent(goal, tuple(self._new_objects), tuple(literals))

    def _standard_event(self, proj: SimState, queued_kinds):
        # life script: the bank relationship and a job come first
        if self.event_count == 1:
            return self._bind_open_account(proj)
        if self.event_count == 2:
            return self._bind_get_job(proj)
        return self._menu_draw(proj, queued_kinds)

    def _criminal_event(self, proj: SimState, queued_kinds):
        if self.event_count == 1:
            return self._pipeline_goal(proj)
        if self.rng.random() < self.profile.pipeline_share:
            return self._pipeline_goal(proj)
        drawn = self._menu_draw(proj, queued_kinds)
        if drawn is None:
            # nothing everyday is affordable yet; the pipeline moves on
            return self._pipeline_goal(proj)
        return drawn

    def _menu_draw(self, proj: SimState, queued_kinds):
        kinds = [k for k, _ in self.profile.menu]
        weights = [w for _, w in self.profile.menu]
        for _ in range(3):
            kind = self.rng.choices(kinds, weights=weights)[0]
            if kind in ("collect-wages", "get-job", "open-company") and kind in queued_kinds:
                continue
            result = self._binders[kind](proj)
            if result is not None:
                return result
        return None

    # -- helpers ---------------------------------------------------------------

    def _known_accounts(self) -> list[str]:
        accounts = list(self.personal_accounts)
        if self.company_account:
            accounts.append(self.company_account)
        accounts.extend(self.hop_accounts)
        return accounts

    def _funded_account(self, proj: SimState, amount: int) -> str | None:
        best = None
        best_balance = None
        for acc in self._known_accounts():
            balance = proj.value("balance", (acc,))
            if balance is None or balance < amount:
                continue
            if best_balance is None or balance > best_balance:
                best, best_balance = acc, balance
        return best

    def _payment_account(self, proj: SimState, amount: int) -> str | None:
        """Account to pay from: funded directly, or repairable via wages."""
        funded = self._funded_account(proj, amount)
        if funded is not None:
            return funded
        if proj.has("employed", (self.c,)) and self.personal_accounts:
            return self.personal_accounts[0]
        return None

    def _grant_card(self) -> list[Literal]:
        if self.card_granted:
            return []
        self.card_granted = True
        return [Literal("has-card", (self.c, self._fresh("card")))]

    def _randint(self, bounds: tuple[int, int]) -> int:
        return self.rng.randint(bounds[0], bounds[1])

    # -- everyday binders --------------------------------------------------------

    def _bind_open_account(self, proj):
        acc = self._fresh("acc")
        self.personal_accounts.append(acc)
        goal = self._goal("open-account", {"c": self.c, "acc": acc, "country": HOME_COUNTRY})
        return goal, self._grant_card()

    def _bind_get_job(self, proj):
        if proj.has("employed", (self.c,)):
            return None
        wage = self._randint(self.profile.ranges.wage)
        goal = self._goal("get-job", {"c": self.c, "firm": self._fresh("firm"), "wage": str(wage)})
        return goal, []

    def _bind_collect_wages(self, proj):
        if not proj.has("employed", (self.c,)) or not self.personal_accounts:
            return None
        dwp = proj.value("days-without-pay", (self.c,)) or Fraction(0)
        days = max(0, 5 - int(dwp))
        target = int(proj.value("working-day", (self.c,)) or 0) + days
        goal = self._goal(
            "collect-wages",
            {"c": self.c, "acc": self.personal_accounts[0], "days": days, "target": str(target)},
        )
        return goal, []

    def _bind_save_cash(self, proj):
        if not self.personal_accounts:
            return None
        amt = self._randint(self.profile.ranges.savings)
        goal = self._goal(
            "save-cash",
            {"c": self.c, "acc": self.personal_accounts[0], "tx": self._fresh("tx"), "amt": str(amt)},
        )
        return goal, []

    def _bind_pay_bills(self, proj):
        amt = self._randint(self.profile.ranges.bill)
        acc = self._payment_account(proj, amt)
        if acc is None:
            return None
        bill = self._fresh("bill")
        literals = [
            Literal("bill-due", (self.c, bill)),
            Literal("owes-money", (self.c, bill)),
            Literal("owed-money", (bill,), amt),
        ]
        goal = self._goal(
            "pay-bills",
            {"c": self.c, "acc": acc, "bill": bill, "tx": self._fresh("tx"), "amt": str(amt)},
        )
        return goal, literals

    def _purchase(self, proj, kind_funds: str, kind_cash: str, obj_prefix: str, bounds):
        amt = self._randint(bounds)
        obj = self._fresh(obj_prefix)
        tx = self._fresh("tx")
        acc = self._payment_account(proj, amt)
        if acc is not None:
            kind = kind_funds
        else:
            dirty = proj.value("dirty-money", (self.c,)) or Fraction(0)
            known = self._known_accounts()
            if proj.has("has-dirty-money", (self.c,)) and dirty >= amt and known:
                kind, acc = kind_cash, known[0]
            else:
                return None
        bindings = {"c": self.c, "acc": acc, "tx": tx, "amt": str(amt)}
        literals = [Literal("price", (obj,), amt)]
        if obj_prefix == "srv":
            bindings["srv"] = obj
            literals.append(Literal("provides-service", (self._fresh("vendor"), obj)))
        else:
            bindings["prod"] = obj
        return self._goal(kind, bindings), literals

    def _bind_buy_product(self, proj):
        return self._purchase(proj, "buy-product", "buy-product-cash", "prod",
                              self.profile.ranges.product)

    def _bind_use_service(self, proj):
        return self._purchase(proj, "use-service", "use-service-cash", "srv",
                              self.profile.ranges.service)

    def _bind_pay_friend(self, proj):
        amt = self._randint(self.profile.ranges.friend_payment)
        acc = self._payment_account(proj, amt)
        if acc is None:
            return None
        friend = self._fresh("person")
        dest = self._fresh("acc")
        literals = [
            Literal("account-owner", (friend, dest)),
            Literal("account-country", (dest, HOME_COUNTRY)),
            Literal("balance", (dest,), 0),
        ]
        goal = self._goal(
            "pay-friend",
            {"c": self.c, "acc": acc, "dest": dest, "tx": self._fresh("tx"), "amt": str(amt)},
        )
        return goal, literals

    def _bind_move_savings(self, proj):
        if not self.personal_accounts:
            return None
        amt = self._randint(self.profile.ranges.self_transfer)
        acc = self._payment_account(proj, amt)
        if acc is None:
            return None
        if len(self.personal_accounts) >= 2:
            dest = self.personal_accounts[1] if acc != self.personal_accounts[1] else self.personal_accounts[0]
        else:
            dest = self._fresh("acc")  # created by precondition repair
            self.personal_accounts.append(dest)
        goal = self._goal(
            "move-savings",
            {"c": self.c, "acc": acc, "acc2": dest, "tx": self._fresh("tx"), "amt": str(amt)},
        )
        return goal, []

    def _bind_open_company(self, proj):
        if self.company is not None:
            return None
        self.company = self._fresh("comp")
        self.company_account = self._fresh("acc")
        goal = self._goal(
            "open-company",
            {"c": self.c, "comp": self.company, "cacc": self.company_account,
             "country": HOME_COUNTRY},
        )
        return goal, []

    def _bind_withdraw_cash(self, proj):
        amt = self._randint(self.profile.ranges.withdraw_small)
        acc = self._payment_account(proj, amt)
        if acc is None:
            return None
        goal = self._goal(
            "withdraw-cash",
            {"c": self.c, "acc": acc, "tx": self._fresh("tx"), "amt": str(amt)},
        )
        return goal, []

    def _bind_digital_topup(self, proj):
        if not self.personal_accounts:
            return None
        amt = self._randint(self.profile.ranges.digital_topup)
        if self.std_wallet is None:
            self.std_wallet = self._fresh("wallet")
        literals = [
            Literal("owns", (self.c, self.std_wallet)),
            Literal("balance", (self.std_wallet,), amt),
        ]
        goal = self._goal(
            "digital-topup",
            {"c": self.c, "wallet": self.std_wallet, "acc": self.personal_accounts[0],
             "tx": self._fresh("tx"), "amt": str(amt)},
        )
        return goal, literals

    def _outside_transfer(self, proj, kind: str, country: str, mark_banned: bool):
        amt = self._randint(self.profile.ranges.transfer_small)
        acc = self._payment_account(proj, amt)
        if acc is None:
            return None
        holder = self._fresh("person")
        dest = self._fresh("acc")
        literals = [
            Literal("account-owner", (holder, dest)),
            Literal("account-country", (dest, country)),
            Literal("balance", (dest,), 0),
        ]
        if mark_banned:
            literals.append(Literal("banned-country", (country,)))
        goal = self._goal(
            kind, {"c": self.c, "acc": acc, "dest": dest, "tx": self._fresh("tx"), "amt": str(amt)}
        )
        return goal, literals

    def _bind_transfer_out(self, proj):
        return self._outside_transfer(proj, "transfer-out", HOME_COUNTRY, False)

    def _bind_transfer_abroad(self, proj):
        return self._outside_transfer(proj, "transfer-abroad", self._fresh("country"), False)

    # -- laundering pipeline -------------------------------------------------------

    def _pipeline_goal(self, proj):
        c = self.c
        dirty = proj.value("dirty-money", (c,)) or Fraction(0)
        has_dirty = proj.has("has-dirty-money", (c,))
        laundering = proj.has("money-laundering", (c,))
        if not has_dirty and not laundering:
            return self._bind_crime(proj)
        if has_dirty and dirty > 0:
            return self._bind_placement(proj, dirty)
        if has_dirty:
            return self._bind_layering(proj)
        return self._bind_integration(proj)

    def _bind_crime(self, proj):
        self.cycle += 1
        amt = self._randint(self.profile.ranges.crime_income)
        goal = self._goal("commit-crime", {"c": self.c, "amt": str(amt)}, priority=True)
        return goal, []

    def _split_structured(self, total: int) -> list[int]:
        lo, hi = self.profile.ranges.structuring_chunk
        chunks: list[int] = []
        remaining = total
        while remaining > 0:
            if remaining <= hi:
                chunks.append(remaining)
                break
            chunk = self.rng.randint(lo, hi)
            chunks.append(chunk)
            remaining -= chunk
        return chunks

    def _split_parts(self, total: int, parts: int) -> list[int]:
        base = total // parts
        chunks = []
        remaining = total
        for _ in range(parts - 1):
            jitter = self.rng.randint(-base // 4, base // 4) if base >= 4 else 0
            chunk = max(1, base + jitter)
            chunks.append(chunk)
            remaining -= chunk
        chunks.append(remaining)
        return chunks

    def _bind_placement(self, proj, dirty: Fraction):
        total = int(dirty)
        mode = self.profile.placement_mode
        if mode == "random":
            mode = "cash" if self.rng.random() < 0.5 else "digital"
        tags = set()
        if self.company is None:
            self.company = self._fresh("comp")
            self.company_account = self._fresh("acc")
            tags.add("setup")
        bindings = {
            "c": self.c,
            "comp": self.company,
            "cacc": self.company_account,
            "country": HOME_COUNTRY,
        }
        literals = self._grant_card()
        if mode == "cash":
            if "setup" in tags and self.accomplice is None and self.rng.random() < 0.5:
                self.accomplice = self._fresh("person")
                tags.add("crew")
            bindings["accomplice"] = self.accomplice or self.c
            chunks = self._split_structured(total)
            kind = "place-funds-cash"
        else:
            bindings["wallet"] = self._fresh("wallet")
            bindings["total"] = str(total)
            chunks = self._split_parts(total, self.rng.randint(2, 3))
            kind = "place-funds-digital"
        bindings["chunks"] = tuple(str(x) for x in chunks)
        bindings["txs"] = tuple(self._fresh("tx") for _ in chunks)
        goal = self._goal(kind, bindings, tags=frozenset(tags), priority=True)
        return goal, literals

    def _bind_layering(self, proj):
        source = self.company_account or (self.personal_accounts[0] if self.personal_accounts else None)
        if source is None:
            return None
        total = int(proj.value("balance", (source,)) or 0)
        total = max(total, 0)
        hops = self._randint(self.profile.layering_hops)
        while len(self.hop_accounts) < hops:
            self.hop_accounts.append(self._fresh("acc"))
        froms, tos = [], []
        current = source
        for i in range(hops):
            froms.append(current)
            tos.append(self.hop_accounts[i])
            current = self.hop_accounts[i]
        txs = tuple(self._fresh("tx") for _ in range(hops))
        bindings = {
            "c": self.c,
            "froms": tuple(froms),
            "tos": tuple(tos),
            "txs": txs,
            "amts": tuple(str(total) for _ in range(hops)),
            "endtx": txs[-1],
            "endamt": str(total),
            "country": HOME_COUNTRY,
        }
        # repairs need to know who owns a missing hop account
        owners = [self.company, self.accomplice or self.c, self.c]
        for i, acc in enumerate(self.hop_accounts[:hops]):
            bindings[f"owner:{acc}"] = owners[i % len(owners)]
        goal = self._goal("layer-funds", bindings, priority=True)
        return goal, []

    def _bind_integration(self, proj):
        accounts = [a for a in ([self.company_account] + self.hop_accounts) if a]
        accounts += self.personal_accounts
        best, best_balance = None, Fraction(0)
        for acc in accounts:
            balance = proj.value("balance", (acc,)) or Fraction(0)
            if balance > best_balance:
                best, best_balance = acc, balance
        if best is None:
            return None
        lo, hi = self.profile.ranges.integration_share
        amt = max(1, int(int(best_balance) * self.rng.uniform(lo, hi)))
        mode = self.profile.integration_mode
        if mode == "random":
            mode = self.rng.choices(["withdraw", "bills", "abroad"], weights=[0.4, 0.3, 0.3])[0]
        tx = self._fresh("tx")
        literals: list[Literal] = []
        if mode == "withdraw":
            goal = self._goal(
                "integrate-withdraw",
                {"c": self.c, "acc": best, "tx": tx, "amt": str(amt)},
                priority=True,
            )
        elif mode == "bills":
            goal = self._goal(
                "integrate-bills",
                {"c": self.c, "acc": best, "bill": self._fresh("bill"), "tx": tx, "amt": str(amt)},
                priority=True,
            )
        else:
            country = self._fresh("country")
            holder = self._fresh("person")
            dest = self._fresh("acc")
            literals = [
                Literal("account-owner", (holder, dest)),
                Literal("account-country", (dest, country)),
                Literal("balance", (dest,), 0),
            ]
            if self.profile.mark_banned_destination:
                literals.append(Literal("banned-country", (country,)))
            goal = self._goal(
                "integrate-abroad",
                {"c": self.c, "acc": best, "dest": dest, "tx": tx, "amt": str(amt)},
                priority=True,
            )
        return goal, literals
