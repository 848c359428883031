"""Clock-domain metamorphosis: split a single-clock register chain across
two same-frequency clock domains with synchronizer stages in between.

The transform is only applied where the declared-offset equivalence is
provable by construction: the crossing register must be read by exactly
one downstream register whose update reads nothing else, downstream
registers may not read inputs or upstream registers, and every output
cone must be entirely on one side of the cut. The mutant's record declares
offset = k cycles for downstream outputs; the added clock is driven
identically to the original by every stimulus (the Identical relation -
Multiple(n) is representable but never emitted by this transform).
"""

from dataclasses import dataclass, replace
from typing import Optional

from .. import nodes as n
from ..errors import CutNotFound, NoClockedChain, NoSyncSite
from .logic import _width_map
from .record import MutationRecord, fresh_name, fresh_series


@dataclass(frozen=True)
class ClockDomain:
    clock: str
    members: tuple  # register names
    relation: str = "identical"  # "identical" | "multiple"
    multiple: int = 1


@dataclass(frozen=True)
class SyncStage:
    source: str
    stages: tuple  # stage register names, source domain first
    destination_clock: str


@dataclass(frozen=True)
class SyncSite:
    dst_reg: str
    src_reg: str
    block_index: int


def clock_domains(module: n.ModuleDecl):
    """One domain per clock, collecting the registers each clock owns."""
    domains = {}
    for item in module.items:
        if isinstance(item, n.ProcBlock) and isinstance(item.sensitivity, n.EdgeSensitivity):
            clocks, _ = _split_edges(item)
            if len(clocks) != 1:
                continue
            domains.setdefault(clocks[0], set()).update(n.assigned_names(item.body))
    return tuple(ClockDomain(c, tuple(sorted(m))) for c, m in sorted(domains.items()))


def _split_edges(block):
    body = block.body
    while isinstance(body, n.Block) and len(body.stmts) == 1:
        body = body.stmts[0]
    cond_refs = n.refs_in(body.cond) if isinstance(body, n.If) else set()
    clocks, resets = [], []
    for edge, sig in block.sensitivity.edges:
        (resets if sig in cond_refs else clocks).append((edge, sig))
    return [s for _, s in clocks], resets


def _straight_nbas(stmt):
    """Flat list of nonblocking assigns, or None if control flow intrudes."""
    out = []
    for s in (stmt.stmts if isinstance(stmt, n.Block) else (stmt,)):
        if isinstance(s, n.NonblockingAssign) and isinstance(s.lhs, n.Ref):
            out.append(s)
        else:
            return None
    return out


def _comb_deps(module):
    """name -> set of register/input names it transitively depends on."""
    defs = {}
    for d in module.nets:
        if d.init is not None:
            defs[d.name] = n.refs_in(d.init)
    for item in module.items:
        if isinstance(item, n.ContinuousAssign):
            defs[n.lvalue_base(item.lhs)] = n.refs_in(item.rhs)
        elif isinstance(item, n.ProcBlock) and isinstance(item.sensitivity, n.CombSensitivity):
            reads = set()
            for s in n.walk_stmts(item.body):
                for e in n.stmt_exprs(s):
                    reads |= n.refs_in(e)
            for w in n.assigned_names(item.body):
                defs[w] = reads - {w}

    cache = {}

    def resolve(name, seen=()):
        if name in cache:
            return cache[name]
        if name not in defs or name in seen:
            return {name}
        out = set()
        for r in defs[name]:
            out |= resolve(r, seen + (name,))
        cache[name] = out
        return out

    return resolve


@dataclass(frozen=True)
class ClockMutationConfig:
    seed: int = 0
    k: int = 2  # synchronizer depth; 2-flop practice
    cut: Optional[str] = None  # register at the boundary; None = auto-pick
    convolute: bool = False


def split_domain(module: n.ModuleDecl, cut: str, k: int = 2):
    """Move the logic downstream of `cut` onto a new clock clk2, inserting
    k synchronizer registers at the boundary. Returns (mutant, record) with
    offset = k declared for every output in the downstream cone."""
    if k < 1:
        raise ValueError("k must be >= 1")
    clocked = [(i, item) for i, item in enumerate(module.items)
               if isinstance(item, n.ProcBlock)
               and isinstance(item.sensitivity, n.EdgeSensitivity)]
    if len(clocked) != 1:
        raise NoClockedChain(f"need exactly one clocked block, found {len(clocked)}")
    idx, block = clocked[0]
    clocks, reset_edges = _split_edges(block)
    if len(clocks) != 1:
        raise NoClockedChain("block must have exactly one clock")
    clock = clocks[0]

    body = block.body
    unwrapped = body.stmts[0] if isinstance(body, n.Block) and len(body.stmts) == 1 else body
    if isinstance(unwrapped, n.If) and reset_edges:
        reset_cond, reset_stmt, main = unwrapped.cond, unwrapped.then_stmt, unwrapped.else_stmt
    else:
        reset_cond, reset_stmt, main = None, None, unwrapped
    if main is None:
        raise NoClockedChain("block has no non-reset arm")
    nbas = _straight_nbas(main)
    reset_nbas = _straight_nbas(reset_stmt) if reset_stmt is not None else []
    if nbas is None or reset_nbas is None:
        raise NoClockedChain("register updates must be straight-line assigns")

    regs = {a.lhs.name: a for a in nbas}
    if cut not in regs:
        raise CutNotFound(f"{cut} is not a register updated in the clocked block")

    readers = [r for r, a in regs.items() if cut in n.refs_in(a.rhs) and r != cut]
    if len(readers) != 1:
        raise CutNotFound(f"{cut} must feed exactly one register, feeds {len(readers)}")
    crossing_reg = readers[0]
    crossing_rhs = regs[crossing_reg].rhs
    if n.refs_in(crossing_rhs) != {cut}:
        raise CutNotFound(f"{crossing_reg} must read only {cut} across the cut")

    downstream = {crossing_reg}
    changed = True
    while changed:
        changed = False
        for r, a in regs.items():
            if r not in downstream and (n.refs_in(a.rhs) & downstream):
                downstream.add(r)
                changed = True
    upstream = set(regs) - downstream
    for r in downstream - {crossing_reg}:
        bad = n.refs_in(regs[r].rhs) - downstream
        if bad:
            raise CutNotFound(f"downstream register {r} reads {sorted(bad)}")
    for r in upstream:
        if n.refs_in(regs[r].rhs) & downstream:
            raise CutNotFound(f"upstream register {r} reads across the cut")

    # every output must sit entirely on one side
    deps_of = _comb_deps(module)
    widths = _width_map(module)
    offsets = {}
    for p in module.ports:
        if p.direction != "output":
            continue
        deps = deps_of(p.name) & set(regs)
        if deps and deps <= downstream:
            offsets[p.name] = k
        elif deps & downstream:
            raise CutNotFound(f"output {p.name} mixes both sides of the cut")
        else:
            offsets[p.name] = 0

    taken = set(module.declared_names())
    clk2 = fresh_name("clk2", taken)
    taken.add(clk2)
    stage_names = fresh_series("sync_reg", k, taken)
    cross_w = widths(crossing_reg)
    rng_args = n.make_range(cross_w)

    def zero(width):
        return n.Literal(0, width, base="b")

    src_assigns = [regs[r] for r in regs if r in upstream]
    src_assigns.append(n.NonblockingAssign(n.Ref(stage_names[0]), crossing_rhs))
    dst_assigns = []
    for prev, cur in zip(stage_names, stage_names[1:]):
        dst_assigns.append(n.NonblockingAssign(n.Ref(cur), n.Ref(prev)))
    dst_assigns.append(n.NonblockingAssign(n.Ref(crossing_reg), n.Ref(stage_names[-1])))
    dst_assigns.extend(regs[r] for r in regs if r in downstream - {crossing_reg})

    src_resets = [a for a in reset_nbas if a.lhs.name in upstream]
    src_resets.append(n.NonblockingAssign(n.Ref(stage_names[0]), zero(cross_w)))
    dst_resets = [n.NonblockingAssign(n.Ref(s), zero(cross_w)) for s in stage_names[1:]]
    dst_resets.extend(a for a in reset_nbas if a.lhs.name in downstream)

    def build_block(sens_clock, assigns, resets):
        sens_edges = [("pos", sens_clock)] + [(e, s) for e, s in reset_edges]
        if reset_cond is not None:
            inner = n.If(reset_cond, n.Block(tuple(resets)), n.Block(tuple(assigns)))
            return n.ProcBlock(n.EdgeSensitivity(tuple(sens_edges)), n.Block((inner,)))
        return n.ProcBlock(n.EdgeSensitivity((("pos", sens_clock),)),
                           n.Block(tuple(assigns)))

    items = []
    for i, item in enumerate(module.items):
        if i != idx:
            items.append(item)
            continue
        items.append(build_block(clock, src_assigns, src_resets))
        items.append(build_block(clk2, dst_assigns, dst_resets))

    ports = list(module.ports)
    clk_pos = next((i for i, p in enumerate(ports) if p.name == clock), len(ports) - 1)
    ports.insert(clk_pos + 1, n.PortDecl(clk2, "input"))
    nets = list(module.nets) + [n.NetDecl(s, "reg", *rng_args) for s in stage_names]

    mutant = n.ModuleDecl(module.name, tuple(ports), module.params,
                          tuple(nets), tuple(items), pos=module.pos)
    stage = SyncStage(source=cut, stages=tuple(stage_names),
                      destination_clock=clk2)
    record = MutationRecord(strategy="clock", seed=0,
                            sites=[f"cut {cut} -> {crossing_reg} via "
                                   f"{','.join(stage.stages)}, k={k}"],
                            output_offsets=offsets,
                            clock_map={clk2: clock})
    return mutant, record


# --- synchronizer convolution ---------------------------------------------------


def find_sync_sites(module: n.ModuleDecl):
    """Pure register-to-register hops (x <= y) inside clocked blocks."""
    regs = {d.name for d in module.nets if d.kind == "reg"}
    regs |= {p.name for p in module.ports if p.kind == "reg"}
    sites = []
    for idx, item in enumerate(module.items):
        if not isinstance(item, n.ProcBlock) or \
                not isinstance(item.sensitivity, n.EdgeSensitivity):
            continue
        for s in n.walk_stmts(item.body):
            if isinstance(s, n.NonblockingAssign) and isinstance(s.lhs, n.Ref) \
                    and isinstance(s.rhs, n.Ref) and s.rhs.name in regs:
                sites.append(SyncSite(s.lhs.name, s.rhs.name, idx))
    return sites


CONVOLUTION_EXTRA_OFFSET = 2  # hold + guarded capture stages


def convolute_synchronizer(module: n.ModuleDecl, site: SyncSite = None,
                           record: MutationRecord = None):
    """Replace a plain hop with a toggle-req/ack-mirror handshake that
    degenerates to a fixed extra latency of 2 cycles under identical
    clocks. Returns (mutant, record) with downstream offsets bumped."""
    sites = find_sync_sites(module)
    if site is None:
        if not sites:
            raise NoSyncSite("no register-to-register hop to convolute")
        site = sites[0]
    elif site not in sites:
        raise NoSyncSite(f"{site.dst_reg} <= {site.src_reg} is not a sync hop")

    widths = _width_map(module)
    w = widths(site.src_reg)
    taken = set(module.declared_names())
    req = fresh_name("hs_req", taken); taken.add(req)
    ack = fresh_name("hs_ack", taken); taken.add(ack)
    hold = fresh_name("hs_hold", taken); taken.add(hold)
    cap = fresh_name("hs_cap", taken); taken.add(cap)

    src_idx = next((i for i, item in enumerate(module.items)
                    if isinstance(item, n.ProcBlock)
                    and site.src_reg in n.assigned_names(item.body)), None)
    if src_idx is None:
        raise NoSyncSite(f"source register {site.src_reg} has no clocked driver")

    def zero(width):
        return n.Literal(0, width, base="b")

    def patch_block(item, is_src, is_dst):
        def patch(stmt):
            if isinstance(stmt, n.Block):
                out = []
                for s in stmt.stmts:
                    if is_dst and isinstance(s, n.NonblockingAssign) and \
                            isinstance(s.lhs, n.Ref) and s.lhs.name == site.dst_reg and \
                            isinstance(s.rhs, n.Ref) and s.rhs.name == site.src_reg:
                        out.append(n.NonblockingAssign(n.Ref(ack), n.Ref(req)))
                        out.append(n.If(n.Binary("!=", n.Ref(req), n.Ref(ack)),
                                        n.Block((n.NonblockingAssign(n.Ref(cap), n.Ref(hold)),))))
                        out.append(n.NonblockingAssign(n.Ref(site.dst_reg), n.Ref(cap)))
                    else:
                        out.append(patch(s))
                if is_src and stmt is _main_arm(item):
                    out.append(n.NonblockingAssign(n.Ref(req), n.Unary("~", n.Ref(req))))
                    out.append(n.NonblockingAssign(n.Ref(hold), n.Ref(site.src_reg)))
                if is_src and stmt is _reset_arm(item):
                    out.append(n.NonblockingAssign(n.Ref(req), zero(1)))
                    out.append(n.NonblockingAssign(n.Ref(hold), zero(w)))
                if is_dst and stmt is _reset_arm(item):
                    out.append(n.NonblockingAssign(n.Ref(ack), zero(1)))
                    out.append(n.NonblockingAssign(n.Ref(cap), zero(w)))
                return replace(stmt, stmts=tuple(out))
            if isinstance(stmt, n.If):
                return replace(stmt, then_stmt=patch(stmt.then_stmt),
                               else_stmt=patch(stmt.else_stmt) if stmt.else_stmt else None)
            return stmt

        return replace(item, body=patch(_blocked(item.body)))

    items = []
    for i, item in enumerate(module.items):
        if i == site.block_index and i == src_idx:
            items.append(patch_block(item, True, True))
        elif i == site.block_index:
            items.append(patch_block(item, False, True))
        elif i == src_idx:
            items.append(patch_block(item, True, False))
        else:
            items.append(item)

    nets = list(module.nets) + [
        n.NetDecl(req, "reg"), n.NetDecl(ack, "reg"),
        n.NetDecl(hold, "reg", *n.make_range(w)),
        n.NetDecl(cap, "reg", *n.make_range(w)),
    ]
    mutant = replace(module, nets=tuple(nets), items=tuple(items))

    if record is None:
        record = MutationRecord(strategy="clock", seed=0)
        for p in module.ports:
            if p.direction == "output":
                record.output_offsets[p.name] = 0
    deps_of = _comb_deps(module)
    clocked_regs = _clocked_reg_closure(module, site.dst_reg)
    for p in module.ports:
        if p.direction != "output":
            continue
        if deps_of(p.name) & clocked_regs:
            record.output_offsets[p.name] = \
                record.output_offsets.get(p.name, 0) + CONVOLUTION_EXTRA_OFFSET
    record.sites.append(
        f"convolute {site.src_reg} -> {site.dst_reg} (+{CONVOLUTION_EXTRA_OFFSET})")
    return mutant, record


def _blocked(s):
    return s if isinstance(s, n.Block) else n.Block((s,))


def _main_arm(item):
    body = _blocked(item.body)
    inner = body.stmts[0] if len(body.stmts) == 1 else None
    if isinstance(inner, n.If) and isinstance(inner.else_stmt, n.Block):
        return inner.else_stmt
    return body


def _reset_arm(item):
    body = _blocked(item.body)
    inner = body.stmts[0] if len(body.stmts) == 1 else None
    if isinstance(inner, n.If) and isinstance(inner.then_stmt, n.Block):
        return inner.then_stmt
    return None


def _clocked_reg_closure(module, seed_reg):
    """seed_reg plus every register fed (transitively) from it."""
    assigns = {}
    for item in module.items:
        if isinstance(item, n.ProcBlock) and isinstance(item.sensitivity, n.EdgeSensitivity):
            for s in n.walk_stmts(item.body):
                if isinstance(s, (n.NonblockingAssign,)) and isinstance(s.lhs, n.Ref):
                    assigns.setdefault(s.lhs.name, set()).update(n.refs_in(s.rhs))
    cone = {seed_reg}
    changed = True
    while changed:
        changed = False
        for r, reads in assigns.items():
            if r not in cone and reads & cone:
                cone.add(r)
                changed = True
    return cone


# --- composed strategy -----------------------------------------------------------


def mutate_clock(module: n.ModuleDecl, cfg: ClockMutationConfig = None):
    cfg = cfg or ClockMutationConfig()
    cut = cfg.cut
    last_error = None
    if cut is not None:
        mutant, record = split_domain(module, cut, cfg.k)
    else:
        mutant = record = None
        for d in module.nets:
            if d.kind != "reg":
                continue
            try:
                mutant, record = split_domain(module, d.name, cfg.k)
                break
            except (CutNotFound, NoClockedChain) as exc:
                last_error = exc
        if mutant is None:
            raise last_error or CutNotFound("no register boundary to cut")
    record.seed = cfg.seed
    if cfg.convolute:
        mutant, record = convolute_synchronizer(mutant, record=record)
    return mutant, record
