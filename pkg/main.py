#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Laboratório de Frentes Aceleradas KPP
=====================================

Orquestrador de experimentos numéricos para frentes Fisher-KPP com dados
iniciais de decaimento lento: simulação na reta, problemas na célula
periódica, autopares principais e verificação das previsões assintóticas.
"""

import sys
import json
import logging
import argparse
import itertools
from datetime import datetime
from pathlib import Path
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Any, Optional, Tuple

import numpy as np

from consolidador import ArtifactConsolidator
from kpp.cell import (
    GlobalSolution,
    average_level_constant,
    construct_global_solution,
    predicted_bmt,
    rate_samples,
    ratio_limit_check,
    solve_terminal_value,
)
from kpp.config import ExperimentConfig, Settings, load_experiment_config, load_settings, parse_experiment_config
from kpp.errors import ConfigError, KppError, LevelRangeError
from kpp.frontsim import (
    SCHEMA_HEADER,
    DomainPlan,
    FrontRun,
    extract_average_level_set,
    extract_level_set,
    flatness_diagnostic,
    load_run,
    plan_domain,
    save_run,
    simulate_front,
)
from kpp.logistic import level_time, linear_constant, predict_level_position, solve_profile
from kpp.plotting import PlotStyle, Series, write_svg
from kpp.profiles import inverse_tail, make_algebraic, profile_from_config
from kpp.reaction import reaction_from_config
from kpp.reports import VerificationReport
from kpp.spectral import eigenpair_for
from kpp.verify import (
    fit_decay_rate,
    verify_bmt_rate,
    verify_flatness,
    verify_homogeneous_levelsets,
    verify_mean_levelsets,
    verify_ratio_limit,
    verify_spreading_law,
)

logger = logging.getLogger("kpp")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFICATION = 3

PLOT_POINTS = 1500


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
    return path


def write_csv(path: Path, columns: List[str], rows) -> Path:
    """CSV versionado: linha de esquema, cabeçalho e dados em %.17g"""
    with open(path, 'w', encoding='utf-8') as f:
        f.write(SCHEMA_HEADER + "\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
    return path


def _front_plot(run: FrontRun, path: Path) -> None:
    """Instantâneos da frente sobre x (até 6, nós subamostrados)"""
    picks = np.unique(np.linspace(0, len(run.times) - 1, min(6, len(run.times))).astype(int))
    nodes = np.unique(np.linspace(0, run.fields.shape[1] - 1, PLOT_POINTS).astype(int))
    series = [Series(name=f"t={run.times[k]:.3g}", x=run.x[nodes].tolist(), y=run.fields[k, nodes].tolist())
              for k in picks]
    write_svg(path, series, PlotStyle(title="Frente u(t,x)", x_label="x", y_label="u"))


class KppExperimentOrchestrator:
    """Orquestrador principal dos experimentos"""

    def __init__(self, settings: Settings, threads: Optional[int] = None, quiet: bool = False):
        self.settings = settings
        self.threads = threads or settings.threads
        self.quiet = quiet

    def _print(self, message: str = "") -> None:
        if not self.quiet:
            print(message)

    def _output_dir(self, out: Optional[str], name: str) -> Path:
        if out:
            path = Path(out)
        else:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            path = Path(self.settings.results_dir) / f"{name}_{timestamp}"
        path.mkdir(parents=True, exist_ok=True)
        return path

    # ------------------------------------------------------------------ #
    # Experimentos
    # ------------------------------------------------------------------ #

    def _global_solution(self, config: ExperimentConfig, f) -> GlobalSolution:
        numerics = config.numerics
        return construct_global_solution(f, n=numerics.global_n, t_max=numerics.global_t_max,
                                         grid=numerics.cell_nodes, dt=numerics.dt)

    def _plan(self, config: ExperimentConfig, u0, f, f0: float, g: Optional[GlobalSolution] = None) -> DomainPlan:
        """
        Domínio explícito ou planejado; a constante de φ_min ~ c·e^{-f0 T} vem
        do perfil logístico (f homogênea) ou da solução global (f periódica).
        """
        numerics = config.numerics
        if numerics.x_right is not None:
            return DomainPlan(x_left=numerics.x_left, x_right=numerics.x_right, dx=numerics.dx)
        m_min = config.m_min or min(config.m)
        level = m_min / 4.0
        if f.kind == "homogeneous":
            constant = linear_constant(solve_profile(f), level)
        else:
            constant = average_level_constant(g or self._global_solution(config, f), level)
        return plan_domain(u0, f0, config.horizon, m_min=m_min, safety=numerics.safety, dx=numerics.dx,
                           x_left=numerics.x_left, node_budget=self.settings.node_budget, constant=constant)

    def _simulate(self, config: ExperimentConfig, out_dir: Path, f, u0, f0: float,
                  g: Optional[GlobalSolution] = None) -> FrontRun:
        plan = self._plan(config, u0, f, f0, g)
        self._print(f"Domínio: [{plan.x_left:g}, {plan.x_right:.1f}] com {plan.nodes} nós, "
                    f"horizonte T={config.horizon:g}")
        run = simulate_front(f, u0, config.horizon, plan, dt=config.numerics.dt,
                             stride=config.numerics.stride, taint_threshold=config.numerics.taint_threshold)
        save_run(run, out_dir / "run")
        times, flatness = flatness_diagnostic(run)
        write_csv(out_dir / "flatness.csv", ["t", "max_ux_over_u"], zip(times, flatness))
        _front_plot(run, out_dir / "front.svg")
        if run.tainted:
            logger.warning("Execução contaminada pela fronteira em t=%.4g", run.tainted_at)
        return run

    def _levelset_trajectory(self, run: FrontRun, config: ExperimentConfig, out_dir: Path, predictor,
                             average_window: Optional[float] = None) -> None:
        """Posição mais à direita de E_m(t) (ou Ē_m(t)) contra a previsão, por instantâneo"""
        rows, series = [], []
        for m in config.m:
            measured_t, measured_x, predicted_t, predicted_x = [], [], [], []
            for t in run.times:
                if t < 1.0 or not run.untainted_at(t):
                    continue
                if average_window is None:
                    points = extract_level_set(run, m, t)
                else:
                    points = extract_average_level_set(run, m, t, average_window)
                    points = np.array([]) if isinstance(points, str) else points
                try:
                    prediction = predictor(m, t)
                except LevelRangeError:
                    prediction = float("nan")
                position = float(points.max()) if len(points) else float("nan")
                rows.append((t, m, position, prediction))
                if np.isfinite(position) and position > 0:
                    measured_t.append(float(t))
                    measured_x.append(position)
                if np.isfinite(prediction) and prediction > 0:
                    predicted_t.append(float(t))
                    predicted_x.append(prediction)
            if measured_t:
                series.append(Series(name=f"medido m={m}", x=measured_t, y=measured_x, kind="points"))
            if predicted_t:
                series.append(Series(name=f"previsto m={m}", x=predicted_t, y=predicted_x))
        write_csv(out_dir / "levelsets.csv", ["t", "m", "rightmost", "predicted"], rows)
        if series:
            write_svg(out_dir / "levelsets.svg", series,
                      PlotStyle(title="Conjuntos de nível", x_label="t", y_label="posição", log_y=True))

    def run_experiment(self, config: ExperimentConfig, out_dir: Path) -> Tuple[int, Optional[VerificationReport]]:
        """Executa o experimento nomeado de ponta a ponta"""
        numerics = config.numerics
        f = reaction_from_config(config.reaction)
        experiment = config.experiment

        if experiment in ("bmt_rate", "ratio_limit", "global_solution"):
            return self._cell_experiment(config, out_dir, f)

        u0 = profile_from_config(config.initial_data)
        f0 = eigenpair_for(f, "zero", numerics.eigen_nodes).rate
        g = None
        if experiment in ("mean_levelsets", "flatness"):
            g = self._global_solution(config, f)
            write_json(out_dir / "global_solution.json", g.summary())
        run = self._simulate(config, out_dir, f, u0, f0, g)
        T = config.horizon

        if experiment == "simulate":
            return EXIT_OK, None

        if experiment in ("hom_levelsets", "spreading_law"):
            profile = solve_profile(f)
            self._levelset_trajectory(run, config, out_dir,
                                      lambda m, t: predict_level_position(profile, u0, m, t))
            spreading = verify_spreading_law(run, profile, u0, config.m, T, band=config.band)
            if experiment == "spreading_law":
                return self._finish(spreading, out_dir)
            report = verify_homogeneous_levelsets(run, profile, u0, config.m, T, eps=config.eps,
                                                  r=config.margin_rate)
            report.parameters["band"] = config.band
            report.parameters["classical_front"] = spreading.parameters["classical_front"]
            for entry in spreading.entries:
                entry.label = f"lei de espalhamento {entry.label}"
                report.entries.append(entry)
            report.notes.extend(spreading.notes)
            return self._finish(report, out_dir)

        if experiment == "mean_levelsets":
            self._levelset_trajectory(run, config, out_dir,
                                      lambda m, t: inverse_tail(u0, predicted_bmt(g, m, t)),
                                      average_window=f.period)
            bmt = {m: solve_terminal_value(f, m, T, tol=numerics.tol, n=numerics.cell_nodes, dt=numerics.dt).B
                   for m in config.m}
            report = verify_mean_levelsets(run, g, u0, config.m, T, eps=config.eps, r=config.margin_rate,
                                           bmt=bmt)
            return self._finish(report, out_dir)

        if experiment == "flatness":
            if len(config.horizons) < 2:
                raise ConfigError("O experimento flatness exige dois horizontes")
            report = verify_flatness(run, g, u0, (min(config.horizons), max(config.horizons)))
            return self._finish(report, out_dir)

        raise ConfigError(f"Experimento desconhecido: {experiment}")

    def _cell_experiment(self, config: ExperimentConfig, out_dir: Path, f) -> Tuple[int, Optional[VerificationReport]]:
        numerics = config.numerics
        m = config.m[0]

        if config.experiment == "global_solution":
            g = self._global_solution(config, f)
            self._global_outputs(g, out_dir)
            return EXIT_OK, None

        if config.experiment == "bmt_rate":
            samples = rate_samples(f, m, sorted(config.horizons), n=numerics.cell_nodes, dt=numerics.dt,
                                   tol=numerics.tol, threads=self.threads)
            f0 = eigenpair_for(f, "zero", numerics.eigen_nodes).rate
            write_csv(out_dir / "bmt.csv", ["T", "B"], samples)
            rate = fit_decay_rate(samples)
            T = [s[0] for s in samples]
            intercept = float(np.mean(np.log([s[1] for s in samples]) + rate * np.array(T)))
            write_svg(out_dir / "bmt.svg", [
                Series(name="B(m,T)", x=T, y=[s[1] for s in samples], kind="points"),
                Series(name=f"ajuste: taxa {rate:.4f}", x=T, y=[float(np.exp(intercept - rate * t)) for t in T]),
            ], PlotStyle(title=f"Decaimento de B({m:g},T)", x_label="T", y_label="B", log_y=True))
            report = verify_bmt_rate(samples, f0, m, tol=config.tolerance)
            return self._finish(report, out_dir)

        T_list = sorted(config.horizons)
        ratios = ratio_limit_check(f, m, T_list, n=numerics.cell_nodes, dt=numerics.dt, threads=self.threads)
        write_csv(out_dir / "ratios.csv", ["T", "ratio"], zip(T_list, ratios))
        report = verify_ratio_limit(T_list, ratios, m, tol=config.tolerance)
        return self._finish(report, out_dir)

    def _global_outputs(self, g, out_dir: Path) -> Dict[str, Any]:
        summary = g.summary()
        write_json(out_dir / "global_solution.json", summary)
        rows = zip(g.times, g.fields.mean(axis=1), g.fields.min(axis=1), g.fields.max(axis=1))
        write_csv(out_dir / "global_solution.csv", ["t", "mean", "min", "max"], rows)
        return summary

    def _finish(self, report: VerificationReport, out_dir: Path) -> Tuple[int, VerificationReport]:
        write_json(out_dir / "report.json", report.to_payload())
        self._print_report(report)
        return (EXIT_OK if report.passed else EXIT_VERIFICATION), report

    def _print_report(self, report: VerificationReport) -> None:
        self._print(f"\nRELATÓRIO: {report.theorem}")
        self._print("=" * 50)
        for entry in report.entries:
            self._print(f"   [{entry.status}] {entry.label}: medido={entry.measured} previsto={entry.predicted}")
        for note in report.notes:
            self._print(f"   nota: {note}")
        self._print(f"Resultado: {'APROVADO' if report.passed else 'REPROVADO'}")

    # ------------------------------------------------------------------ #
    # Subcomandos
    # ------------------------------------------------------------------ #

    def experiment(self, config: ExperimentConfig, out: Optional[str]) -> int:
        out_dir = self._output_dir(out or config.output_dir, config.experiment)
        self._print(f"\nEXPERIMENTO {config.experiment.upper()}")
        self._print("=" * 50)
        write_json(out_dir / "config.json", config.model_dump(mode="json"))
        status, report = self.run_experiment(config, out_dir)
        ArtifactConsolidator(str(out_dir)).write_manifest(
            experiment=config.experiment,
            status="pass" if status == EXIT_OK else "fail",
        )
        self._print(f"Artefatos em: {out_dir}")
        return status

    def levelsets(self, run_dir: str, m: float, t: float, window: Optional[float]) -> int:
        run = load_run(run_dir)
        if window is None:
            points = extract_level_set(run, m, t).tolist()
        else:
            points = extract_average_level_set(run, m, t, window)
            points = points if isinstance(points, str) else points.tolist()
        print(json.dumps({"m": m, "t": t, "window": window, "positions": points,
                          "tainted": not run.untainted_at(t)}, ensure_ascii=False, indent=2))
        return EXIT_OK

    def logistic(self, reaction: Dict[str, Any], m: float, T: float, alpha: float, plateau: float) -> int:
        profile = solve_profile(reaction_from_config(reaction))
        T_m = level_time(profile, m)
        payload = {
            "m": m,
            "T": T,
            "T_m": T_m,
            "phi": profile.eval(T_m - T),
            "c_m": linear_constant(profile, m),
            "predicted_position": predict_level_position(profile, make_algebraic(alpha, plateau), m, T),
        }
        print(json.dumps(payload, ensure_ascii=False, indent=2))
        return EXIT_OK

    def eigen(self, reaction: Dict[str, Any], n: int, at: str, csv: Optional[str]) -> int:
        pair = eigenpair_for(reaction_from_config(reaction), at, n)
        print(json.dumps(pair.as_dict(), ensure_ascii=False, indent=2))
        if csv:
            psi = pair.eigenfunction
            write_csv(Path(csv), ["x", "psi"], zip(psi.nodes, psi.values))
        return EXIT_OK

    def bmt(self, reaction: Dict[str, Any], m: float, T: float, n: int, dt: float, tol: float) -> int:
        result = solve_terminal_value(reaction_from_config(reaction), m, T, tol=tol, n=n, dt=dt)
        print(json.dumps(result.as_dict(), ensure_ascii=False, indent=2))
        return EXIT_OK

    def globalsol(self, reaction: Dict[str, Any], n: float, t_max: float, grid: int, dt: float,
                  out: Optional[str]) -> int:
        g = construct_global_solution(reaction_from_config(reaction), n=n, t_max=t_max, grid=grid, dt=dt)
        out_dir = self._output_dir(out, "solucao_global")
        summary = self._global_outputs(g, out_dir)
        ArtifactConsolidator(str(out_dir)).write_manifest(experiment="global_solution", status="info")
        print(json.dumps(summary, ensure_ascii=False, indent=2))
        return EXIT_OK

    def sweep(self, config: ExperimentConfig, out: Optional[str]) -> int:
        """Varredura cartesiana (m, T, alpha) em processos independentes"""
        if config.sweep is None:
            raise ConfigError("Configuração sem tabela [sweep]")
        out_dir = self._output_dir(out or config.output_dir, f"varredura_{config.experiment}")
        tasks = []
        for m, T, alpha in itertools.product(config.sweep.m, config.sweep.T, config.sweep.alpha):
            variant = config.model_copy(deep=True)
            variant.m = [m]
            variant.horizons = [T] if config.experiment != "flatness" else [min(config.horizons), T]
            variant.initial_data.alpha = alpha
            name = f"m{m:g}_T{T:g}_a{alpha:g}"
            tasks.append((variant.model_dump(mode="json"), str(out_dir / name), self.settings))

        self._print(f"\nVARREDURA: {len(tasks)} execuções em {self.threads} processos")
        self._print("=" * 50)
        if self.threads > 1:
            with ProcessPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(_sweep_worker, tasks))
        else:
            results = [_sweep_worker(task) for task in tasks]

        consolidator = ArtifactConsolidator(str(out_dir))
        consolidator.consolidate_sweep()
        worst = max(code for _, code in results)
        consolidator.write_manifest(experiment=f"sweep:{config.experiment}",
                                    status="pass" if worst == EXIT_OK else "fail")
        for name, code in results:
            self._print(f"   {name}: código {code}")
        return worst


def _sweep_worker(task) -> Tuple[str, int]:
    data, out_dir, settings = task
    config = parse_experiment_config(data)
    orchestrator = KppExperimentOrchestrator(settings, threads=1, quiet=True)
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    try:
        code, _ = orchestrator.run_experiment(config, path)
    except KppError as e:
        logger.error("Execução %s falhou: %s", path.name, e)
        write_json(path / "error.json", {"error": type(e).__name__, "message": str(e)})
        code = e.exit_code
    return path.name, code


def _add_reaction_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--reaction', choices=['fisher', 'periodic_fisher', 'table'], default='fisher',
                        help='Família da não linearidade (padrão: fisher)')
    parser.add_argument('--amplitude', type=float, default=0.0, help='Amplitude a de periodic_fisher')
    parser.add_argument('--period', type=float, default=1.0, help='Período L')
    parser.add_argument('--table', help='Tabela CSV/NPZ para a família table')


def _reaction_fragment(args) -> Dict[str, Any]:
    return {"family": args.reaction, "amplitude": args.amplitude, "period": args.period, "table_path": args.table}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Arquivo de experimento (TOML ou JSON)')
    common.add_argument('--out', help='Diretório de saída (padrão: KPP_RESULTS_DIR/<experimento>_<timestamp>)')
    common.add_argument('--threads', type=int, help='Processos paralelos (padrão: KPP_THREADS)')
    common.add_argument('--quiet', action='store_true', help='Somente avisos e o resultado final')

    parser = argparse.ArgumentParser(
        description="Laboratório numérico de frentes aceleradas Fisher-KPP",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exemplos de uso:
  python main.py simulate --config experiments/minimal.toml --out resultados/minimo
  python main.py levelsets --run resultados/minimo/run --m 0.5 --t 5
  python main.py logistic --reaction fisher --m 0.5 --T 10
  python main.py eigen --reaction periodic_fisher --amplitude 0.5 --n 512 --at one
  python main.py bmt --reaction periodic_fisher --amplitude 0.5 --m 0.5 --T 10
  python main.py globalsol --reaction fisher --n 1000 --t-max 15
  python main.py verify --experiment hom_levelsets --config experiments/hom_levelsets_alpha4.toml
  python main.py sweep --config experiments/sweep_hom.toml --threads 4
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('simulate', parents=[common], help='Simula a frente na reta')

    p = sub.add_parser('levelsets', parents=[common], help='Extrai conjuntos de nível de uma execução salva')
    p.add_argument('--run', required=True, help='Diretório com snapshots.csv e run.json')
    p.add_argument('--m', type=float, required=True)
    p.add_argument('--t', type=float, required=True)
    p.add_argument('--window', type=float, help='Janela L para o conjunto de nível médio')

    p = sub.add_parser('logistic', parents=[common], help='Perfil logístico, T_m e posição prevista')
    _add_reaction_args(p)
    p.add_argument('--m', type=float, default=0.5)
    p.add_argument('--T', type=float, default=10.0)
    p.add_argument('--alpha', type=float, default=2.0, help='Expoente da cauda algébrica de u0')
    p.add_argument('--plateau', type=float, default=1.0)

    p = sub.add_parser('eigen', parents=[common], help='Autopar principal no toro')
    _add_reaction_args(p)
    p.add_argument('--n', type=int, default=512)
    p.add_argument('--at', choices=['zero', 'one'], default='zero')
    p.add_argument('--csv', help='Grava os valores nodais da autofunção')

    p = sub.add_parser('bmt', parents=[common], help='Problema de valor terminal B(m,T)')
    _add_reaction_args(p)
    p.add_argument('--m', type=float, default=0.5)
    p.add_argument('--T', type=float, default=10.0)
    p.add_argument('--n', type=int, default=64)
    p.add_argument('--dt', type=float, default=1e-3)
    p.add_argument('--tol', type=float, default=1e-8)

    p = sub.add_parser('globalsol', parents=[common], help='Solução global na célula e constantes α, ω')
    _add_reaction_args(p)
    p.add_argument('--n', type=float, default=1000.0)
    p.add_argument('--t-max', type=float, default=15.0)
    p.add_argument('--grid', type=int, default=64)
    p.add_argument('--dt', type=float, default=1e-3)

    p = sub.add_parser('verify', parents=[common], help='Executa um experimento de verificação')
    p.add_argument('--experiment', choices=['hom_levelsets', 'spreading_law', 'mean_levelsets', 'flatness',
                                            'bmt_rate', 'ratio_limit'])

    sub.add_parser('sweep', parents=[common], help='Varredura de parâmetros a partir de [sweep]')
    return parser


def _configure_logging(level: str, quiet: bool) -> None:
    logging.basicConfig(
        level=logging.WARNING if quiet else getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Função principal com argumentos de linha de comando"""
    args = build_parser().parse_args(argv)

    try:
        settings = load_settings()
        _configure_logging(settings.log_level, args.quiet)
        orchestrator = KppExperimentOrchestrator(settings, threads=args.threads, quiet=args.quiet)

        if args.command in ('simulate', 'verify', 'sweep'):
            if not args.config:
                raise ConfigError(f"O subcomando {args.command} exige --config")
            config = load_experiment_config(args.config)
            if args.command == 'simulate':
                config.experiment = 'simulate'
            elif args.command == 'verify' and args.experiment:
                config.experiment = args.experiment
            if args.command == 'sweep':
                return orchestrator.sweep(config, args.out)
            return orchestrator.experiment(config, args.out)

        if args.command == 'levelsets':
            return orchestrator.levelsets(args.run, args.m, args.t, args.window)
        if args.command == 'logistic':
            return orchestrator.logistic(_reaction_fragment(args), args.m, args.T, args.alpha, args.plateau)
        if args.command == 'eigen':
            return orchestrator.eigen(_reaction_fragment(args), args.n, args.at, args.csv)
        if args.command == 'bmt':
            return orchestrator.bmt(_reaction_fragment(args), args.m, args.T, args.n, args.dt, args.tol)
        if args.command == 'globalsol':
            return orchestrator.globalsol(_reaction_fragment(args), args.n, args.t_max, args.grid, args.dt,
                                          args.out)

    except KppError as e:
        print(f"Erro ({type(e).__name__}): {e}", file=sys.stderr)
        return e.exit_code

    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
