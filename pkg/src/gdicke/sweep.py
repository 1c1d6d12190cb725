"""Phase-diagram sweeps and regression-table drivers with CSV output.

Grid points are independent solves distributed over a process pool; results
are merged by grid index, so worker count never changes the output.  CSV
numbers are written with 12 significant digits, making reruns byte-identical.
"""
from __future__ import annotations

import concurrent.futures as cf
from dataclasses import dataclass, replace

import numpy as np

from .basis import RESTRICT_EXCITATION, build_reduced, build_truncated
from .config import AxisSpec, RunConfig
from .errors import ModelError
from .hamiltonian import KIND_DICKE, assemble
from .model import ValidatedModel
from .observables import ErrorMetrics, ObservableSet, error_metrics, expectations, separatrix
from .solver import assemble_kappa, caps_for_region, caps_for_sector, ground_state
from .symmetry import SymmetrySet, conventional_constants, sector_from_label, sectors


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


@dataclass(frozen=True)
class SectorPlan:
    sigma: tuple[int, ...]
    caps: tuple[int, ...]
    kappa: tuple[int, ...]


@dataclass(frozen=True)
class PointTask:
    index: tuple[int, int]
    x: tuple[float, ...]
    plans: tuple[SectorPlan, ...]


@dataclass
class OrderOutcome:
    label: str
    sigma_label: str
    dim: int
    obs: ObservableSet
    sector_energies: dict
    keys: np.ndarray | None = None
    coeffs: np.ndarray | None = None
    kappa: tuple[int, ...] | None = None


@dataclass
class PointResult:
    index: tuple[int, int]
    x: tuple[float, ...]
    outcomes: dict | None = None     # order label -> OrderOutcome ("full" included)
    error: str | None = None


def _plan_sectors(model: ValidatedModel, ops: SymmetrySet, err: float,
                  policy: str, wanted) -> tuple[SectorPlan, ...]:
    plans = []
    policy_fn = caps_for_region if policy == "region" else caps_for_sector
    for sec in sorted(sectors(ops, model), key=lambda s: s.sigma):
        if sec.kappa_min is None:
            continue
        if wanted != "all" and sec.label not in wanted:
            continue
        caps = policy_fn(model, ops, sec.sigma, err)
        kappa = assemble_kappa(model, ops, caps)
        plans.append(SectorPlan(sigma=sec.sigma, caps=caps, kappa=kappa))
    if not plans:
        raise ModelError("no parity sector selected")
    return tuple(plans)


def _solve_point(model: ValidatedModel, ops: SymmetrySet, task: PointTask,
                 orders, kind: str, restriction: str, keep_state: bool) -> PointResult:
    try:
        pt_model = model.with_strengths(task.x)
        outcomes: dict[str, OrderOutcome] = {}
        order_list = [("full", None)] + [(f"{o1},{o2}", (o1, o2)) for o1, o2 in orders]
        for label, order in order_list:
            best = None
            sector_energies = {}
            for plan in task.plans:
                if order is None:
                    basis = build_truncated(pt_model, ops, plan.sigma, plan.kappa,
                                            plan.caps, restriction)
                else:
                    basis = build_reduced(pt_model, ops, plan.sigma, plan.kappa,
                                          plan.caps, order[0], order[1], restriction)
                if len(basis) == 0:
                    continue
                g = ground_state(assemble(basis, pt_model, kind))
                lab = "".join("eo"[p] for p in plan.sigma)
                sector_energies[lab] = (g.energy, len(basis))
                if best is None or g.energy < best[0].energy:
                    best = (g, lab, plan)
            if best is None:
                raise ModelError("all sectors empty at this point")
            g, lab, plan = best
            outcomes[label] = OrderOutcome(
                label=label, sigma_label=lab, dim=len(g.basis),
                obs=expectations(g), sector_energies=sector_energies,
                keys=g.basis.keys if (keep_state and label == "full") else None,
                coeffs=g.coeffs if (keep_state and label == "full") else None,
                kappa=plan.kappa)
        return PointResult(index=task.index, x=task.x, outcomes=outcomes)
    except Exception as exc:   # worker survives per-point failures
        return PointResult(index=task.index, x=task.x, error=f"{type(exc).__name__}: {exc}")


@dataclass
class SweepResult:
    shape: tuple[int, int]
    axis_values: tuple[tuple[float, ...], tuple[float, ...]]
    orders: tuple[tuple[int, int], ...]
    energy: dict            # order label -> 2D array
    winner: dict            # order label -> 2D array of sector labels
    delta: dict             # order label -> 2D array of relative energy error
    sep_mask: np.ndarray
    files: list
    failures: list
    points: dict            # (i, j) -> PointResult


def run_sweep(cfg: RunConfig, out_prefix: str | None = None,
              workers: int | None = None, keep_states: bool = False) -> SweepResult:
    """Solve the configured grid and write one CSV per order plus a separatrix CSV.

    Raster order is row-major with the first axis fastest.  Cutoffs are
    derived once per distinct (axis value, coupling) pair through the
    process-wide memo, then shipped to workers inside the task payload.
    """
    model = cfg.model
    run = cfg.run
    ops = conventional_constants(model)
    workers = run.workers if workers is None else workers
    if not cfg.axes:
        raise ModelError("sweep requires a [grid] section with at least one axis")
    ax1 = cfg.axes[0]
    ax2 = cfg.axes[1] if len(cfg.axes) > 1 else None
    vals1 = ax1.values()
    vals2 = ax2.values() if ax2 else [None]
    ci1 = model.coupling_index(ax1.j, ax1.k)
    ci2 = model.coupling_index(ax2.j, ax2.k) if ax2 else None

    base_x = [s.strength if s.dimensionless else None for s in model.couplings]
    if any(v is None for v in base_x):
        raise ModelError("sweeps need dimensionless coupling strengths")

    tasks = []
    for i, v2 in enumerate(vals2):
        for j, v1 in enumerate(vals1):
            x = list(base_x)
            x[ci1] = v1
            if ci2 is not None:
                x[ci2] = v2
            pt_model = model.with_strengths(x)
            plans = _plan_sectors(pt_model, ops, run.err, cfg.run.policy, run.sectors)
            tasks.append(PointTask(index=(i, j), x=tuple(x), plans=plans))

    results: dict[tuple[int, int], PointResult] = {}
    if workers <= 1:
        for t in tasks:
            results[t.index] = _solve_point(model, ops, t, run.orders, run.kind,
                                            run.restriction, True)
    else:
        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_solve_point, model, ops, t, run.orders, run.kind,
                                run.restriction, True): t for t in tasks}
            for fut in cf.as_completed(futs):
                res = fut.result()
                results[res.index] = res

    ny, nx = len(vals2), len(vals1)
    labels = ["full"] + [f"{o1},{o2}" for o1, o2 in run.orders]
    energy = {lab: np.full((ny, nx), np.nan) for lab in labels}
    winner = {lab: np.full((ny, nx), "", dtype=object) for lab in labels}
    delta = {lab: np.zeros((ny, nx)) for lab in labels}
    failures = []
    state_grid = [[None] * nx for _ in range(ny)]
    for (i, j), res in results.items():
        if res.error:
            failures.append((res.index, res.x, res.error))
            continue
        for lab in labels:
            oc = res.outcomes[lab]
            energy[lab][i, j] = oc.obs.energy
            winner[lab][i, j] = oc.sigma_label
        full = res.outcomes["full"]
        state_grid[i][j] = (full.keys, full.coeffs)
        for lab in labels[1:]:
            m = error_metrics(full.obs, res.outcomes[lab].obs)
            delta[lab][i, j] = m.delta_energy

    if ny >= 3 or nx >= 3:
        ok = all(s is not None for row in state_grid for s in row)
        sep_mask = separatrix(state_grid) if ok and ny * nx >= 3 else np.zeros((ny, nx), bool)
    else:
        sep_mask = np.zeros((ny, nx), dtype=bool)

    files = []
    if out_prefix:
        files = _write_sweep_files(out_prefix, model, run, labels, vals1, vals2,
                                   ax2 is not None, results, sep_mask, failures)
    if not keep_states:
        for res in results.values():
            if res.outcomes:
                res.outcomes["full"].keys = None
                res.outcomes["full"].coeffs = None
    return SweepResult(shape=(ny, nx),
                       axis_values=(tuple(vals1), tuple(v if v is not None else 0.0
                                                        for v in vals2)),
                       orders=run.orders, energy=energy, winner=winner, delta=delta,
                       sep_mask=sep_mask, files=files, failures=failures,
                       points=results)


def _write_sweep_files(prefix, model, run, labels, vals1, vals2, two_axes,
                       results, sep_mask, failures):
    ell, n = model.ell, model.n
    zeta = len(conventional_constants(model).ops)
    files = []
    xcols = ["x1", "x2"] if two_axes else ["x1"]
    base_cols = (xcols + ["sector", "energy"]
                 + [f"k{z + 1}" for z in range(zeta)] + ["dim"]
                 + [f"nphot{s + 1}" for s in range(ell)]
                 + [f"var{s + 1}" for s in range(ell)]
                 + [f"pop{k + 1}" for k in range(n)] + ["is_separatrix"])
    for lab in labels:
        fname = f"{prefix}_{'full' if lab == 'full' else 'order_' + lab.replace(',', '_')}.csv"
        cols = list(base_cols)
        if lab != "full":
            cols += ["delta_e"] + [f"dfluct{s + 1}" for s in range(ell)]
        with open(fname, "w", encoding="utf-8") as fh:
            fh.write("# raster: row-major, x1 fastest\n")
            fh.write(",".join(cols) + "\n")
            for i in range(len(vals2)):
                for j in range(len(vals1)):
                    res = results.get((i, j))
                    if res is None or res.error:
                        continue
                    oc = res.outcomes[lab]
                    full = res.outcomes["full"]
                    row = [vals1[j]] + ([vals2[i]] if two_axes else [])
                    row += [oc.sigma_label, oc.obs.energy]
                    row += list(oc.kappa)
                    row += [oc.dim]
                    row += list(oc.obs.photon_mean) + list(oc.obs.photon_var)
                    row += list(oc.obs.populations)
                    row += [int(bool(sep_mask[i, j]))]
                    if lab != "full":
                        m = error_metrics(full.obs, oc.obs)
                        row += [m.delta_energy] + list(m.delta_fluct)
                    fh.write(",".join(_fmt(v) if not isinstance(v, str) else v
                                      for v in row) + "\n")
        files.append(fname)

    sep_name = f"{prefix}_separatrix.csv"
    with open(sep_name, "w", encoding="utf-8") as fh:
        fh.write(",".join(xcols) + "\n")
        for i in range(len(vals2)):
            for j in range(len(vals1)):
                if sep_mask[i, j]:
                    row = [vals1[j]] + ([vals2[i]] if two_axes else [])
                    fh.write(",".join(_fmt(v) for v in row) + "\n")
    files.append(sep_name)

    if failures:
        err_name = f"{prefix}_errors.csv"
        with open(err_name, "w", encoding="utf-8") as fh:
            fh.write("i,j,x,error\n")
            for (i, j), x, msg in sorted(failures):
                fh.write(f"{i},{j},{' '.join(_fmt(v) for v in x)},{msg}\n")
        files.append(err_name)

    files.append(_emit_plot_script(prefix, two_axes, len(conventional_constants(model).ops)))
    return files


def _emit_plot_script(prefix, two_axes, zeta):
    name = f"{prefix}_plot.gp"
    ecol = (3 if not two_axes else 4)
    with open(name, "w", encoding="utf-8") as fh:
        fh.write("# gnuplot script: ground-energy surface and separatrix\n")
        fh.write("set datafile separator ','\n")
        if two_axes:
            fh.write("set dgrid3d\nset pm3d\nset xlabel 'x1'\nset ylabel 'x2'\n")
            fh.write(f"splot '{prefix}_full.csv' every ::1 using 1:2:{ecol} with pm3d "
                     f"title 'ground energy', \\\n")
            fh.write(f"      '{prefix}_separatrix.csv' every ::1 using 1:2:(0) "
                     f"with points pt 7 title 'separatrix'\n")
        else:
            fh.write("set xlabel 'x1'\nset ylabel 'energy'\n")
            fh.write(f"plot '{prefix}_full.csv' every ::1 using 1:{ecol} with lines "
                     f"title 'ground energy'\n")
    return name


# ---------------------------------------------------------------------------
# regression-table drivers
# ---------------------------------------------------------------------------

def reproduce_table2(model_factory, n_atoms_list, x_list, err_list,
                     sigma_label: str = "ee", out_path: str | None = None,
                     restriction: str = RESTRICT_EXCITATION):
    """Truncated-basis dimensions over (particle count, strength, error) cells.

    ``model_factory(n_atoms, x)`` builds the resonant model with every
    coupling at strength ``x``.  Returns rows
    ``(n_atoms, err, x, caps, kappa, dim)`` using the single-sector cutoffs.
    """
    rows = []
    for na in n_atoms_list:
        for err in err_list:
            for x in x_list:
                model = model_factory(na, x)
                ops = conventional_constants(model)
                sigma = sector_from_label(sigma_label)
                caps = caps_for_sector(model, ops, sigma, err)
                kappa = assemble_kappa(model, ops, caps)
                basis = build_truncated(model, ops, sigma, kappa, caps, restriction)
                rows.append({"n_atoms": na, "err": err, "x": x, "caps": caps,
                             "kappa": kappa, "dim": len(basis)})
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write("n_atoms,err,x,caps,k,dim\n")
            for r in rows:
                fh.write(f"{r['n_atoms']},{_fmt(r['err'])},{_fmt(r['x'])},"
                         f"{' '.join(map(str, r['caps']))},"
                         f"{' '.join(map(str, r['kappa']))},{r['dim']}\n")
    return rows


def reproduce_dim_study(model_factory, n_atoms_list, x: float = 4.0,
                        err: float = 1e-10,
                        orders=((2, 2), (1, 1), (0, 0)),
                        sigma_label: str = "ee", policy: str = "sector",
                        out_path: str | None = None,
                        restriction: str = RESTRICT_EXCITATION):
    """Full vs order-reduced dimensions as the particle count grows.

    Returns rows ``(n_atoms, dim_full, dims at each requested order)``; the
    ``region`` policy sizes the basis to serve every parity sector of a
    parameter region, the ``sector`` policy sizes it for one sector only.
    """
    policy_fn = caps_for_region if policy == "region" else caps_for_sector
    rows = []
    for na in n_atoms_list:
        model = model_factory(na, x)
        ops = conventional_constants(model)
        sigma = sector_from_label(sigma_label)
        caps = policy_fn(model, ops, sigma, err)
        kappa = assemble_kappa(model, ops, caps)
        full = build_truncated(model, ops, sigma, kappa, caps, restriction)
        dims = {}
        for o1, o2 in orders:
            red = build_reduced(model, ops, sigma, kappa, caps, o1, o2, restriction)
            dims[(o1, o2)] = len(red)
        rows.append({"n_atoms": na, "caps": caps, "kappa": kappa,
                     "dim_full": len(full), "dims": dims})
    if out_path:
        cols = ["n_atoms", "dim_full"] + [f"dim_{o1}{o2}" for o1, o2 in orders]
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for r in rows:
                vals = [r["n_atoms"], r["dim_full"]] + [r["dims"][o] for o in orders]
                fh.write(",".join(str(v) for v in vals) + "\n")
    return rows
