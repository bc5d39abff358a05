# pv_main.py - MAIN LAUNCHER
# Command-line entry point for perturbation validation runs

import os
import sys
import argparse
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

# Add current directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config.config import Config, LearnerFamilies, SyntheticFamilies, validate_config
from core.errors import PvError
from logger import get_main_logger
from utils import parse_float_list, parse_int_list, write_json, write_table_csv

EXIT_OK = 0
EXIT_APPLICATION_ERROR = 1
EXIT_CELL_ERRORS = 2


logger = get_main_logger()


def print_banner(command: str):
    """Print application banner"""
    print("=" * 80, file=sys.stderr)
    print(f" PERTURBATION VALIDATION - {command}", file=sys.stderr)
    print(f" Started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}", file=sys.stderr)
    print("=" * 80, file=sys.stderr)


def _parse_hyperparams(pairs: Optional[List[str]]) -> Dict[str, Any]:
    hyperparams = {}
    for pair in pairs or []:
        if '=' not in pair:
            raise argparse.ArgumentTypeError(f"expected key=value, got '{pair}'")
        key, value = pair.split('=', 1)
        hyperparams[key.strip()] = yaml.safe_load(value)
    return hyperparams


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='Experiment file (.json or .yaml)')
    parser.add_argument('--seed', type=int, help='Master seed')
    parser.add_argument('--reps', type=int, help='Repetitions per noise degree')
    parser.add_argument('--degrees', type=parse_float_list, help='Noise degrees, e.g. 0,0.1,0.2,0.3')
    parser.add_argument('--out', help='Output directory')
    parser.add_argument('--jobs', type=int, help='Worker threads')


def _add_data_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--data', help='CSV dataset (otherwise a synthetic draw)')
    parser.add_argument('--label-column', default='-1', help='Label column name or index')
    parser.add_argument('--no-header', action='store_true', help='CSV has no header line')
    parser.add_argument('--family', choices=SyntheticFamilies.ALL, default=SyntheticFamilies.MOON)
    parser.add_argument('--n', type=int, default=100, help='Synthetic sample size')
    parser.add_argument('--noise', type=float, default=0.0, help='Synthetic noise level')
    parser.add_argument('--noise-mode', choices=('features', 'labels'), default='features')
    parser.add_argument('--learner', required=True, help=f"Learner family ({', '.join(LearnerFamilies.ALL)})")
    parser.add_argument('--param', action='append', help='Hyperparameter key=value (repeatable)')
    parser.add_argument('--train-seed', type=int, default=0)
    parser.add_argument('--output', help='Result file path')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Perturbation validation toolkit')
    subparsers = parser.add_subparsers(dest='command', required=True)

    generate = subparsers.add_parser('generate', help='Write a synthetic dataset to CSV')
    _add_common_flags(generate)
    generate.add_argument('--family', choices=SyntheticFamilies.ALL, default=SyntheticFamilies.MOON)
    generate.add_argument('--n', type=int, default=100)
    generate.add_argument('--noise', type=float, default=0.0)
    generate.add_argument('--noise-mode', choices=('features', 'labels'), default='features')
    generate.add_argument('--output', help='CSV path (default <out>/<name>.csv)')

    pv = subparsers.add_parser('pv', help='One PV computation, written as JSON')
    _add_common_flags(pv)
    _add_data_flags(pv)
    pv.add_argument('--no-baseline', action='store_true', help='Leave r=0 out of the regression')

    cv = subparsers.add_parser('cv', help='k-fold cross-validation accuracy')
    _add_common_flags(cv)
    _add_data_flags(cv)
    cv.add_argument('--folds', type=int, default=Config.CV_FOLDS)
    cv.add_argument('--no-stratify', action='store_true')

    select = subparsers.add_parser('select', help='Model selection: PV, CV and hold-out accuracy per cell')
    _add_common_flags(select)

    sweep = subparsers.add_parser('sweep', help='Hyperparameter sweep (decision-tree depth by default)')
    _add_common_flags(sweep)
    sweep.add_argument('--learner', default=LearnerFamilies.DECISION_TREE)
    sweep.add_argument('--param', default='max_depth')
    sweep.add_argument('--grid', type=parse_int_list, help='Values, e.g. 1-12 or 1,2,4')

    size = subparsers.add_parser('size', help='Training-size sweep on nested subsamples')
    _add_common_flags(size)
    size.add_argument('--sizes', type=parse_int_list, help='Sample sizes, e.g. 100,1000,10000')

    noise = subparsers.add_parser('noise', help='Hold-out accuracy under training-label noise')
    _add_common_flags(noise)
    noise.add_argument('--noise-grid', type=parse_float_list, help='Training noise degrees in [0, 0.5]')

    scatter = subparsers.add_parser('scatter', help='PV vs training accuracy table from a previous run')
    _add_common_flags(scatter)
    scatter.add_argument('--rows', required=True, help='JSON manifest written by another command')

    serve = subparsers.add_parser('serve', help='Start the HTTP API')
    serve.add_argument('--host', default=Config.API_HOST)
    serve.add_argument('--port', type=int, default=Config.API_PORT)

    return parser


def _output_dir(args) -> Path:
    return Path(args.out or Config.OUTPUT_DIR)


def _load_dataset(args):
    from core.datasets import SyntheticSpec, generate, load_csv
    if args.data:
        label_column = int(args.label_column) if args.label_column.lstrip('-').isdigit() else args.label_column
        return load_csv(args.data, label_column, header=not args.no_header)
    seed = args.seed if args.seed is not None else Config.PV_MASTER_SEED
    return generate(SyntheticSpec(args.family, args.n, args.noise, seed, args.noise_mode))


def cmd_generate(args) -> int:
    from core.datasets import SyntheticSpec, generate, to_csv
    seed = args.seed if args.seed is not None else Config.PV_MASTER_SEED
    dataset = generate(SyntheticSpec(args.family, args.n, args.noise, seed, args.noise_mode))
    path = Path(args.output) if args.output else _output_dir(args) / f"{dataset.name}.csv"
    to_csv(dataset, path)
    logger.info(f"Wrote {dataset.name} ({dataset.n_samples} rows) to {path}")
    print(path)
    return EXIT_OK


def cmd_pv(args) -> int:
    from core.pvcore import NoiseSchedule, pv_validate
    from learners import LearnerSpec
    dataset = _load_dataset(args)
    spec = LearnerSpec.create(args.learner, args.train_seed, **_parse_hyperparams(args.param))
    schedule = NoiseSchedule(
        tuple(args.degrees or Config.PV_DEGREES),
        args.reps or Config.PV_REPETITIONS,
        args.seed if args.seed is not None else Config.PV_MASTER_SEED,
        Config.PV_INCLUDE_BASELINE and not args.no_baseline,
    )
    result = pv_validate(spec, dataset, schedule, max_workers=args.jobs or 1)
    path = Path(args.output) if args.output else _output_dir(args) / f"pv_{dataset.name}_{spec.family}.json"
    write_json(result.to_dict(), path)
    print(f"{spec.label} on {dataset.name}: folded PV={result.folded_score:.4f} "
          f"raw={result.raw_slope_magnitude:.4f} r2={result.r_squared}")
    print(path)
    return EXIT_OK


def cmd_cv(args) -> int:
    from core.baselines import CvSpec, cross_validate
    from learners import LearnerSpec
    dataset = _load_dataset(args)
    spec = LearnerSpec.create(args.learner, args.train_seed, **_parse_hyperparams(args.param))
    cv = CvSpec(args.folds, not args.no_stratify, args.seed if args.seed is not None else 0)
    result = cross_validate(spec, dataset, cv, max_workers=args.jobs or 1)
    path = Path(args.output) if args.output else _output_dir(args) / f"cv_{dataset.name}_{spec.family}.json"
    write_json({'learner': spec.to_dict(), 'dataset': dataset.name, 'cv': cv.to_dict(), **result.to_dict()}, path)
    print(f"{spec.label} on {dataset.name}: CV mean={result.mean:.4f} std={result.std:.4f}")
    print(path)
    return EXIT_OK


def _experiment(args):
    from core.runner import ExperimentRunner
    from interface.experiment_management import DEFAULT_CONFIG_FILE, ExperimentConfigurationManager
    manager = ExperimentConfigurationManager(args.config or DEFAULT_CONFIG_FILE)
    manager.load_configuration()
    config = manager.apply_overrides(seed=args.seed, reps=args.reps, degrees=args.degrees,
                                     out=args.out, jobs=args.jobs)
    return manager, ExperimentRunner(config)


def _finish(rows, stem: str, config, extra_tables=None) -> int:
    from core.runner import any_failed, write_results
    paths = write_results(rows, Path(config.output_dir), stem, config, extra_tables)
    for path in paths.values():
        print(path)
    if any_failed(rows):
        logger.warning(f"{stem}: some grid cells failed, see the error column")
        return EXIT_CELL_ERRORS
    return EXIT_OK


def cmd_select(args) -> int:
    from core.runner import emit_scatter
    manager, runner = _experiment(args)
    manager.display_configuration()
    rows = runner.run_model_selection()
    return _finish(rows, 'model_selection', runner.config, {'scatter': emit_scatter(rows)})


def cmd_sweep(args) -> int:
    from core.runner import sweep_curves
    _, runner = _experiment(args)
    rows = runner.run_hyperparam_sweep(args.learner, args.param, args.grid)
    return _finish(rows, f"sweep_{args.param}", runner.config, {'curve': sweep_curves(rows, args.param)})


def cmd_size(args) -> int:
    _, runner = _experiment(args)
    rows = runner.run_size_sweep(args.sizes)
    return _finish(rows, 'size_sweep', runner.config)


def cmd_noise(args) -> int:
    _, runner = _experiment(args)
    rows = runner.run_noise_sensitivity(args.noise_grid)
    return _finish(rows, 'noise_sensitivity', runner.config)


def cmd_scatter(args) -> int:
    from core.runner import emit_scatter, read_rows
    table = emit_scatter(read_rows(Path(args.rows)))
    path = _output_dir(args) / f"{Path(args.rows).stem}_scatter.csv"
    write_table_csv(table, path, ['dataset', 'learner', 'pv_folded', 'training_accuracy'])
    print(path)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn
    from api.pv_api import app
    logger.info(f"Serving API on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    'generate': cmd_generate,
    'pv': cmd_pv,
    'cv': cmd_cv,
    'select': cmd_select,
    'sweep': cmd_sweep,
    'size': cmd_size,
    'noise': cmd_noise,
    'scatter': cmd_scatter,
    'serve': cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main function"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not validate_config():
        logger.error("Environment configuration is invalid")
        return EXIT_APPLICATION_ERROR

    if args.command not in ('serve', 'scatter'):
        print_banner(args.command)

    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        return EXIT_APPLICATION_ERROR
    except (PvError, argparse.ArgumentTypeError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_APPLICATION_ERROR
    except Exception as e:
        logger.error(f"Application error: {e}", exc_info=True)
        return EXIT_APPLICATION_ERROR


if __name__ == "__main__":
    sys.exit(main())
