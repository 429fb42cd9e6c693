"""
Command line front end.
Exit codes: 0 success, 1 runtime error, 2 usage error, 3 config error, 4 training divergence.
"""
import argparse
import copy
import csv
import json
import logging
import logging.config
import os
import sys
from collections import OrderedDict
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .config import Config, format_config, read_config
from .energy import instrument, write_report_csv, write_report_json
from .exceptions import ConfigError, DivergenceError, SpikeLabError
from .freq import DEFAULT_EXPERIMENT_PARAMS, DEFAULT_MASK_THRESHOLD, compare_chains, high_freq_mask, if_transfer, \
    layered_transfer, lif_transfer, magnitude_grid, relative_log_amplitude, spectrum2d, three_sine_experiment, \
    write_magnitude_csv, write_relative_csv, write_spectrum2d, write_spectrum_csv
from .model import ArchSpec, build, load_checkpoint, save_checkpoint
from .train import SyntheticFreqDataset, TrainConfig, embed_ablation, evaluate, evaluate_ablation, mixer_ablation, \
    pooling_ablation, train, write_metrics_csv
from .types import TJson
from .utils import format_float, make_rng, resolve_seed

__all__ = ['main', 'build_parser', 'configure_logging', 'LOGGING']

logger = logging.getLogger('spikelab')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'spikelab': {
            'handlers': ['console'],
            'level': 'INFO',
        }
    }
}

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DIVERGENCE = 4

DEFAULT_ENERGY_SAMPLES = 8
DEFAULT_ABLATION_SEEDS = 5


def configure_logging(verbose=False):  # type: (bool) -> None
    settings = copy.deepcopy(LOGGING)
    if verbose:
        settings['loggers']['spikelab']['level'] = 'DEBUG'
    logging.config.dictConfig(settings)


def _float_list(value):  # type: (str) -> List[float]
    try:
        return [float(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("'%s' is not a comma separated list of numbers" % value)


def _write_json(data, path):  # type: (TJson, str) -> None
    with open(path, 'w') as f:
        json.dump(data, f, indent=2)
    logger.info('Wrote %s' % path)


def _make_dir(path):  # type: (str) -> str
    if not os.path.isdir(path):
        os.makedirs(path)
    return path


def _load_config(args):  # type: (argparse.Namespace) -> Config
    config = read_config(args.config) if getattr(args, 'config', None) else Config()
    for assignment in getattr(args, 'set', None) or []:
        config.apply_override(assignment)
    return config


def _seed(args, config):  # type: (argparse.Namespace, Config) -> int
    return resolve_seed(getattr(args, 'seed', None), config.get_int('train', 'seed'))


def _data_settings(config, spec, seed):  # type: (Config, ArchSpec, int) -> Dict[str, Any]
    """
    Reads [data] section. Only the synthetic frequency dataset is available, its geometry must match the model.
    """
    dataset = config.get('data', 'dataset', 'synthetic')
    config.check('data', 'dataset', dataset == 'synthetic', "must be 'synthetic', got '%s'" % dataset)
    settings = OrderedDict([
        ('dataset', dataset),
        ('train_size', config.get_int('data', 'train_size', 2000)),
        ('test_size', config.get_int('data', 'test_size', 500)),
        ('size', config.get_int('data', 'size', spec.input_height)),
        ('mode', config.get('data', 'mode', 'mixed')),
        ('seed', config.get_int('data', 'seed', seed)),
    ])
    config.check('data', 'mode', settings['mode'] in SyntheticFreqDataset.MODES,
                 "must be one of %s" % ', '.join(SyntheticFreqDataset.MODES))
    config.check('data', 'train_size', settings['train_size'] > 0, "must be positive")
    config.check('data', 'test_size', settings['test_size'] > 0, "must be positive")
    geometry = (SyntheticFreqDataset.NUM_CLASSES, 1, settings['size'], settings['size'])
    actual = (spec.num_classes, spec.input_channels, spec.input_height, spec.input_width)
    config.check('data', 'size', geometry == actual,
                 "synthetic data has classes x channels x height x width %s, model expects %s" % (geometry, actual))
    return settings


def _datasets(settings):  # type: (Dict[str, Any]) -> Any
    return SyntheticFreqDataset.train_test(settings['train_size'], settings['test_size'], seed=settings['seed'],
                                           size=settings['size'], mode=settings['mode'])


# Commands

def cmd_filter(args):  # type: (argparse.Namespace) -> int
    if args.if_neuron:
        base = if_transfer()
    else:
        if not 0 <= args.beta < 1:
            args.parser.error("--beta must be in range [0, 1), use --if for integrate-and-fire neurons")
        base = lif_transfer(args.beta)
    gains = args.gains if args.gains is not None else [1.0] * args.depth
    if len(gains) != args.depth:
        args.parser.error("--gains must have --depth (%d) values" % args.depth)
    omegas, magnitudes = magnitude_grid(layered_transfer(base, args.depth, gains), n=args.grid_points)

    if args.out:
        write_magnitude_csv(omegas, magnitudes, args.out)
        logger.info('Wrote %s' % args.out)
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(['omega', 'magnitude'])
        for omega, magnitude in zip(omegas, magnitudes):
            writer.writerow([format_float(omega), format_float(magnitude)])
    return EXIT_OK


def cmd_three_sine(args):  # type: (argparse.Namespace) -> int
    out_dir = _make_dir(args.out_dir)
    seed = resolve_seed(args.seed)
    params = DEFAULT_EXPERIMENT_PARAMS.replace(
        beta=args.beta if args.beta is not None else DEFAULT_EXPERIMENT_PARAMS.beta,
        v_th=args.v_th if args.v_th is not None else DEFAULT_EXPERIMENT_PARAMS.v_th
    )
    activations = ('lif', 'relu') if args.activation == 'both' else (args.activation,)

    summary = OrderedDict([('seed', seed), ('cutoff', args.cutoff), ('params', repr(params)),
                           ('hf_energy_ratio', OrderedDict())])
    for activation in activations:
        result = three_sine_experiment(params if activation == 'lif' else 'relu', seed)
        if 'input' not in summary['hf_energy_ratio']:
            write_spectrum_csv(result.spectra['input'], os.path.join(out_dir, 'input.csv'))
            summary['hf_energy_ratio']['input'] = result.hf_ratio('input', args.cutoff)
        for stage in ('activated', 'weighted'):
            write_spectrum_csv(result.spectra[stage], os.path.join(out_dir, '%s_%s.csv' % (activation, stage)))
        summary['hf_energy_ratio'][activation] = OrderedDict(
            (stage, result.hf_ratio(stage, args.cutoff)) for stage in ('activated', 'weighted')
        )

    if args.seeds:
        rows = compare_chains(range(seed, seed + args.seeds), cutoff=args.cutoff, params=params)
        summary['comparison'] = OrderedDict([
            ('rows', rows),
            ('lif_below_relu', sum(1 for row in rows if row['lif'] < row['relu'])),
            ('seeds', args.seeds),
        ])
        logger.info('LIF weighted spectrum has less high frequency energy than ReLU in %d of %d seeds'
                    % (summary['comparison']['lif_below_relu'], args.seeds))

    _write_json(summary, os.path.join(out_dir, 'summary.json'))
    return EXIT_OK


def cmd_spectrum(args):  # type: (argparse.Namespace) -> int
    out_dir = _make_dir(args.out_dir)
    feature = np.load(args.input, allow_pickle=False)
    if feature.ndim == 4:
        # [T or B, C, H, W] maps are averaged over the leading axis
        feature = feature.mean(axis=0)
    s = spectrum2d(feature)
    curve = relative_log_amplitude(s)
    mask = high_freq_mask(s, args.threshold)

    write_spectrum2d(s, os.path.join(out_dir, 'spectrum2d.txt'))
    write_relative_csv(curve, os.path.join(out_dir, 'relative_log_amplitude.csv'))
    total = float(s.amps.sum())
    _write_json(OrderedDict([
        ('input', args.input),
        ('shape', [s.height, s.width]),
        ('dc', s.dc),
        ('threshold', args.threshold),
        ('high_freq_bins', int(mask.sum())),
        ('high_freq_amplitude_fraction', float(s.amps[mask].sum()) / total if total > 0 else 0.0),
        ('highest_radius_delta', curve[-1][1] if curve else None),
    ]), os.path.join(out_dir, 'summary.json'))
    return EXIT_OK


def cmd_train(args):  # type: (argparse.Namespace) -> int
    config = _load_config(args)
    seed = _seed(args, config)
    spec = ArchSpec.from_config(config)
    cfg = TrainConfig.from_config(config, seed=seed)
    settings = _data_settings(config, spec, seed)
    train_data, test_data = _datasets(settings)
    out_dir = _make_dir(args.out_dir)

    net = build(spec, seed=seed)
    _, history = train(net, train_data, cfg, test_dataset=test_data)

    write_metrics_csv(history, os.path.join(out_dir, 'metrics.csv'))
    save_checkpoint(net, os.path.join(out_dir, 'checkpoint.npz'))
    with open(os.path.join(out_dir, 'model.cfg'), 'w') as f:
        f.write(format_config(spec.config_sections() + [('train', cfg.config_items()),
                                                        ('data', list(settings.items()))]))
    logger.info('Training artifacts are in %s' % out_dir)
    return EXIT_OK


def cmd_eval(args):  # type: (argparse.Namespace) -> int
    if args.artifacts:
        result = evaluate_ablation(args.artifacts).summary()
    else:
        if not args.checkpoint:
            args.parser.error("eval needs --checkpoint or --artifacts")
        config = _load_config(args)
        if config.has('model', 'preset') or config.stage_sections():
            net = load_checkpoint(args.checkpoint, net=build(ArchSpec.from_config(config)))
        else:
            net = load_checkpoint(args.checkpoint)
        settings = _data_settings(config, net.spec, _seed(args, config))
        _, test_data = _datasets(settings)
        accuracy, loss = evaluate(net, test_data)
        result = OrderedDict([('accuracy', accuracy), ('loss', loss), ('samples', len(test_data))])

    text = json.dumps(result, indent=2)
    if args.out:
        with open(args.out, 'w') as f:
            f.write(text + '\n')
    sys.stdout.write(text + '\n')
    return EXIT_OK


def cmd_energy(args):  # type: (argparse.Namespace) -> int
    config = _load_config(args)
    seed = _seed(args, config)
    spec = ArchSpec.from_config(config)
    net = build(spec, seed=seed)
    if args.checkpoint:
        load_checkpoint(args.checkpoint, net=net)

    samples = config.get_int('energy', 'samples', DEFAULT_ENERGY_SAMPLES)
    config.check('energy', 'samples', samples > 0, "must be positive")
    zero_input = args.zero_input or config.get_bool('energy', 'zero_input', False)
    shape = (samples, spec.input_channels, spec.input_height, spec.input_width)
    if zero_input:
        inputs = np.zeros(shape)
    elif spec.input_channels == 1 and spec.input_height == spec.input_width:
        inputs = SyntheticFreqDataset.generate(samples, seed=seed, size=spec.input_height).images
    else:
        inputs = make_rng(seed).uniform(0.0, 1.0, size=shape)

    report = instrument(net, inputs)
    out_dir = _make_dir(args.out_dir)
    write_report_csv(report, os.path.join(out_dir, 'energy.csv'))
    write_report_json(report, os.path.join(out_dir, 'energy.json'))
    sys.stdout.write(report.to_table() + '\n')
    return EXIT_OK


_ABLATIONS = OrderedDict([('pooling', pooling_ablation), ('embed', embed_ablation), ('mixer', mixer_ablation)])


def cmd_ablation(args):  # type: (argparse.Namespace) -> int
    config = _load_config(args)
    seed = _seed(args, config)
    if config.has('model', 'preset') or config.stage_sections():
        base = ArchSpec.from_config(config)
    else:
        base = ArchSpec.preset('tiny')
    cfg = TrainConfig.from_config(config, seed=seed)
    settings = _data_settings(config, base, seed)
    out_dir = _make_dir(args.out_dir)

    report = _ABLATIONS[args.kind](
        list(range(seed, seed + args.seeds)), base=base, cfg=cfg, train_size=settings['train_size'],
        test_size=settings['test_size'], size=settings['size'], mode=settings['mode'], checkpoint_dir=out_dir
    )
    report.write(os.path.join(out_dir, 'ablation.json'))
    sys.stdout.write(json.dumps(report.summary(), indent=2) + '\n')
    return EXIT_OK


def build_parser():  # type: () -> argparse.ArgumentParser
    parser = argparse.ArgumentParser(prog='spikelab', description='Spiking transformer frequency and energy lab')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True

    sub = subparsers.add_parser('filter', help='Magnitude response of LIF / IF membrane filters')
    sub.add_argument('--beta', type=float, default=0.25, help='LIF decay factor in [0, 1)')
    sub.add_argument('--depth', type=int, default=1, help='Number of stacked layers')
    sub.add_argument('--gains', type=_float_list, default=None, help='Comma separated per-layer gains')
    sub.add_argument('--grid-points', type=int, default=256)
    sub.add_argument('--if', dest='if_neuron', action='store_true', help='Integrate-and-fire filter (pole at z=1)')
    sub.add_argument('--out', default=None, help='Output CSV path, stdout if omitted')
    sub.set_defaults(handler=cmd_filter, parser=sub)

    sub = subparsers.add_parser('three-sine', help='Three-sine spectra after ReLU and LIF activations')
    sub.add_argument('--activation', choices=('lif', 'relu', 'both'), default='both')
    sub.add_argument('--seed', type=int, default=None, help='FIR weights seed')
    sub.add_argument('--seeds', type=int, default=0, help='Number of seeds for the LIF / ReLU comparison')
    sub.add_argument('--cutoff', type=float, default=150.0, help='High frequency cutoff, Hz')
    sub.add_argument('--beta', type=float, default=None)
    sub.add_argument('--v-th', type=float, default=None)
    sub.add_argument('--out-dir', default='three_sine')
    sub.set_defaults(handler=cmd_three_sine, parser=sub)

    sub = subparsers.add_parser('spectrum', help='2-D spectrum of a saved feature map')
    sub.add_argument('--input', required=True, help='Feature map .npy file [C, H, W]')
    sub.add_argument('--threshold', type=float, default=DEFAULT_MASK_THRESHOLD)
    sub.add_argument('--out-dir', default='spectrum')
    sub.set_defaults(handler=cmd_spectrum, parser=sub)

    for name, handler, help_text in (('train', cmd_train, 'Train a network on synthetic frequency data'),
                                     ('eval', cmd_eval, 'Evaluate a checkpoint or an ablation directory'),
                                     ('energy', cmd_energy, 'Theoretical energy report'),
                                     ('ablation', cmd_ablation, 'Architecture ablation over seeds')):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument('--config', required=name in ('train', 'energy'), help='Config file')
        sub.add_argument('--set', action='append', metavar='SECTION.KEY=VALUE', help='Config override')
        sub.add_argument('--seed', type=int, default=None)
        sub.set_defaults(handler=handler, parser=sub)
        if name == 'train':
            sub.add_argument('--out-dir', default='run')
        elif name == 'eval':
            sub.add_argument('--checkpoint', default=None)
            sub.add_argument('--artifacts', default=None, help='Ablation output directory')
            sub.add_argument('--out', default=None)
        elif name == 'energy':
            sub.add_argument('--checkpoint', default=None)
            sub.add_argument('--zero-input', action='store_true')
            sub.add_argument('--out-dir', default='energy')
        else:
            sub.add_argument('--kind', choices=tuple(_ABLATIONS), default='pooling')
            sub.add_argument('--seeds', type=int, default=DEFAULT_ABLATION_SEEDS, help='Number of seeds')
            sub.add_argument('--out-dir', default='ablation')

    return parser


def main(argv=None):  # type: (Optional[Sequence[str]]) -> int
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging(args.verbose)

    try:
        return args.handler(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except ConfigError as e:
        sys.stderr.write('spikelab: config error: %s\n' % e)
        return EXIT_CONFIG
    except DivergenceError as e:
        sys.stderr.write('spikelab: %s\n' % e)
        return EXIT_DIVERGENCE
    except (SpikeLabError, ValueError, IOError, OSError) as e:
        sys.stderr.write('spikelab: %s\n' % e)
        return EXIT_RUNTIME
