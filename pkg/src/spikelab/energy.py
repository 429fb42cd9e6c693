"""
This file contains theoretical energy estimation of spiking networks.
    SOPs(l) = fr * T * FLOPs(l)
    E_SNN = E_MAC * FLOPs(first layer) + E_AC * sum(SOPs)
    E_ANN = E_MAC * FLOPs
Batch normalization is folded into convolutions at inference and is not charged.
All report numbers are exact fractions of picojoules.
"""
import csv
import json
import logging
from collections import OrderedDict
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Union

import numpy as np

from .layers import Module, Recorder, SpikeTensor
from .numcore import no_grad
from .types import LayerDescriptor, TArrayLike, TJson
from .utils import format_exact, parse_exact

__all__ = ['E_MAC_PJ', 'E_AC_PJ', 'PJ_TO_MJ', 'COMPONENTS', 'flops', 'sops', 'energy_snn_pj', 'energy_snn',
           'energy_ann', 'EnergyRow', 'EnergyReport', 'EnergyRecorder', 'instrument', 'write_report_csv',
           'read_report_csv', 'write_report_json', 'read_report_json']

logger = logging.getLogger('spikelab')

E_MAC_PJ = Fraction(46, 10)
E_AC_PJ = Fraction(9, 10)
PJ_TO_MJ = Fraction(1, 10 ** 9)

COMPONENTS = ('patch_embed', 'token_mix', 'mlp', 'classifier')
CSV_COLUMNS = ('layer', 'stage', 'kind', 'flops', 'fr', 'T', 'sops', 'energy_pJ')

OPERAND_NOTE = 'SSA products are charged with the firing rate of their left operand (K for K^T V, Q for Q (K^T V))'
MULTI_BIT_NOTE = 'multi-bit transmission: spikes of value 2 are charged as two accumulate operations'


def flops(descriptor):  # type: (LayerDescriptor) -> int
    """
    Floating point operations of a single frame (multiply and add counted separately)
    :param descriptor: LayerDescriptor with resolved geometry
    :return: Integer FLOPs. Pooling, LIF and identity layers cost 0.
    :raises ValueError: If geometry fields, required by descriptor kind, are not resolved
    """
    if descriptor.kind in ('conv', 'dwc'):
        descriptor.require('in_channels', 'out_channels', 'kernel_size', 'out_height', 'out_width', 'groups')
        return 2 * descriptor.kernel_size ** 2 * (descriptor.in_channels // descriptor.groups) \
            * descriptor.out_channels * descriptor.out_height * descriptor.out_width
    if descriptor.kind == 'linear':
        descriptor.require('d_in', 'd_out', 'tokens')
        return 2 * descriptor.d_in * descriptor.d_out * descriptor.tokens
    if descriptor.kind == 'matmul':
        descriptor.require('rows', 'inner', 'cols')
        return 2 * descriptor.rows * descriptor.inner * descriptor.cols
    return 0


def _exact(value):  # type: (Union[Fraction, int, float]) -> Fraction
    return value if isinstance(value, Fraction) else Fraction(value)


def sops(flops_l, fr, timesteps, max_value=1):
    # type: (int, Union[Fraction, float], int, int) -> Fraction
    """
    Synaptic operations fr * T * FLOPs, exact
    :param flops_l: Layer FLOPs
    :param fr: Firing rate in [0, 1], or value-weighted rate in [0, max_value] for multi-bit spikes
    :param timesteps: T >= 1
    :param max_value: Largest spike value, transmitted to the layer
    :return: Fraction
    :raises ValueError: If firing rate is out of range, which means broken binarity upstream
    """
    fr = _exact(fr)
    if not 0 <= fr <= max_value:
        raise ValueError("Firing rate must be in range [0, %d], got %s" % (max_value, float(fr)))
    if timesteps < 1:
        raise ValueError("T must be positive, got %d" % timesteps)
    return fr * timesteps * flops_l


def energy_snn_pj(first_layer_flops, spiking_sops):
    # type: (int, Iterable[Union[Fraction, float]]) -> Fraction
    return E_MAC_PJ * first_layer_flops + E_AC_PJ * sum((_exact(s) for s in spiking_sops), Fraction(0))


def energy_snn(first_layer_flops, spiking_sops):  # type: (int, Iterable[Union[Fraction, float]]) -> float
    """
    :return: E_MAC * first layer FLOPs + E_AC * sum of SOPs, in mJ
    """
    return float(energy_snn_pj(first_layer_flops, spiking_sops) * PJ_TO_MJ)


def energy_ann(total_flops):  # type: (int) -> float
    """
    :return: E_MAC * FLOPs, in mJ
    """
    return float(E_MAC_PJ * total_flops * PJ_TO_MJ)


class EnergyRow(object):
    __slots__ = ['layer', 'stage', 'kind', 'flops', 'fr', 'timesteps', 'sops', 'energy_pj']

    def __init__(self, layer, stage, kind, flops_l, fr, timesteps, max_value=1):
        # type: (str, str, str, int, Union[Fraction, float], int, int) -> None
        if kind not in ('mac', 'ac'):
            raise ValueError("Row kind must be 'mac' or 'ac', got '%s'" % kind)
        self.layer = layer
        self.stage = stage
        self.kind = kind
        self.flops = int(flops_l)
        self.fr = _exact(fr)
        self.timesteps = int(timesteps)
        self.sops = sops(self.flops, self.fr, self.timesteps, max_value=max_value)
        self.energy_pj = self.sops * (E_MAC_PJ if kind == 'mac' else E_AC_PJ)

    @property
    def component(self):  # type: () -> str
        return self.stage.partition('/')[2]

    def to_dict(self):  # type: () -> Dict[str, str]
        return OrderedDict([
            ('layer', self.layer), ('stage', self.stage), ('kind', self.kind), ('flops', str(self.flops)),
            ('fr', format_exact(self.fr)), ('T', str(self.timesteps)), ('sops', format_exact(self.sops)),
            ('energy_pJ', format_exact(self.energy_pj))
        ])

    @classmethod
    def from_dict(cls, data):  # type: (Dict[str, str]) -> EnergyRow
        fr = parse_exact(data['fr'])
        row = cls(data['layer'], data['stage'], data['kind'], int(data['flops']), fr, int(data['T']),
                  max_value=max(1, int(np.ceil(float(fr)))))
        for key, attr in (('sops', 'sops'), ('energy_pJ', 'energy_pj')):
            if key in data and parse_exact(data[key]) != getattr(row, attr):
                raise ValueError("Row '%s' %s doesn't match fr * T * FLOPs" % (row.layer, key))
        return row

    def __eq__(self, other):
        return isinstance(other, EnergyRow) and all(getattr(self, name) == getattr(other, name)
                                                    for name in self.__slots__)

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return '<EnergyRow %s %s: %s pJ>' % (self.layer, self.kind, format_exact(self.energy_pj))


class EnergyReport(object):
    """
    Per-layer rows with stage totals. Totals are always recomputed from rows, so they equal row sums exactly.
    """
    def __init__(self, rows, multi_bit=False, notes=None):
        # type: (Iterable[EnergyRow], bool, Optional[List[str]]) -> None
        self.rows = list(rows)
        self.multi_bit = bool(multi_bit)
        self.notes = list(notes) if notes is not None else [OPERAND_NOTE]
        if self.multi_bit and MULTI_BIT_NOTE not in self.notes:
            self.notes.append(MULTI_BIT_NOTE)

    def stage_totals(self):  # type: () -> Dict[str, Fraction]
        totals = OrderedDict()
        for row in self.rows:
            totals[row.stage] = totals.get(row.stage, Fraction(0)) + row.energy_pj
        return totals

    def component_totals(self):  # type: () -> Dict[str, Fraction]
        totals = OrderedDict((component, Fraction(0)) for component in COMPONENTS)
        for row in self.rows:
            totals[row.component] += row.energy_pj
        return totals

    @property
    def total_pj(self):  # type: () -> Fraction
        return sum((row.energy_pj for row in self.rows), Fraction(0))

    @property
    def total_mj(self):  # type: () -> float
        return float(self.total_pj * PJ_TO_MJ)

    @property
    def first_layer_flops(self):  # type: () -> int
        return sum(row.flops for row in self.rows if row.kind == 'mac')

    @property
    def total_flops(self):  # type: () -> int
        return sum(row.flops for row in self.rows)

    @property
    def total_sops(self):  # type: () -> Fraction
        return sum((row.sops for row in self.rows if row.kind == 'ac'), Fraction(0))

    def ann_mj(self):  # type: () -> float
        """
        Energy of the same architecture evaluated as a non-spiking network
        """
        return energy_ann(self.total_flops)

    def to_table(self):  # type: () -> str
        """
        Stage rows against component columns, in mJ with 4 significant digits
        """
        stages = OrderedDict()
        for row in self.rows:
            key = row.stage.partition('/')[0]
            stages.setdefault(key, OrderedDict((c, Fraction(0)) for c in COMPONENTS))[row.component] += row.energy_pj

        header = ['stage'] + list(COMPONENTS) + ['total']
        lines = [header]
        for key, totals in stages.items():
            lines.append([key] + ['%.4g' % float(v * PJ_TO_MJ) for v in totals.values()]
                         + ['%.4g' % float(sum(totals.values()) * PJ_TO_MJ)])
        lines.append(['total'] + ['%.4g' % float(v * PJ_TO_MJ) for v in self.component_totals().values()]
                     + ['%.4g' % self.total_mj])
        widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
        return '\n'.join('  '.join(cell.rjust(width) for cell, width in zip(line, widths)) for line in lines)

    def to_json(self):  # type: () -> TJson
        return OrderedDict([
            ('constants', OrderedDict([('e_mac_pJ', format_exact(E_MAC_PJ)), ('e_ac_pJ', format_exact(E_AC_PJ))])),
            ('multi_bit', self.multi_bit),
            ('notes', self.notes),
            ('rows', [row.to_dict() for row in self.rows]),
            ('stages', OrderedDict((stage, format_exact(v)) for stage, v in self.stage_totals().items())),
            ('components', OrderedDict((c, format_exact(v)) for c, v in self.component_totals().items())),
            ('total_pJ', format_exact(self.total_pj)),
            ('total_mJ', self.total_mj),
            ('ann_mJ', self.ann_mj()),
        ])

    @classmethod
    def from_json(cls, data):  # type: (TJson) -> EnergyReport
        report = cls([EnergyRow.from_dict(row) for row in data['rows']], multi_bit=data.get('multi_bit', False),
                     notes=data.get('notes'))
        if 'total_pJ' in data and parse_exact(data['total_pJ']) != report.total_pj:
            raise ValueError("Report total doesn't match the sum of its rows")
        return report

    def __eq__(self, other):
        return isinstance(other, EnergyReport) and self.rows == other.rows

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return '<EnergyReport %d rows, %.4g mJ>' % (len(self.rows), self.total_mj)


class EnergyRecorder(Recorder):
    """
    Collects a row for every FLOP-bearing operation during a forward pass.
    Stage 1 patch embed convolutions of a static input are the first layer and are charged as MAC.
    """
    def __init__(self, static_input=True):  # type: (bool) -> None
        self.static_input = static_input
        self.rows = []  # type: List[EnergyRow]
        self.multi_bit = False

    @staticmethod
    def stage_key(module):  # type: (Module) -> str
        if module.component == 'classifier' or module.stage is None:
            return 'head/classifier'
        return '%d/%s' % (module.stage, module.component)

    def layer(self, module, spikes, descriptor, label=None):
        # type: (Module, SpikeTensor, LayerDescriptor, Optional[str]) -> None
        name = module.name + ('.' + label if label else '')
        layer_flops = flops(descriptor)
        if self.static_input and module.stage == 1 and module.component == 'patch_embed':
            row = EnergyRow(name, self.stage_key(module), 'mac', layer_flops, 1, 1)
        else:
            values = np.rint(spikes.values).astype(np.int64)
            max_value = int(values.max()) if values.size else 0
            if max_value > 1:
                self.multi_bit = True
            fr = Fraction(int(values.sum()), int(values.size)) if values.size else Fraction(0)
            row = EnergyRow(name, self.stage_key(module), 'ac', layer_flops, fr, spikes.timesteps,
                            max_value=max(1, max_value))
        logger.debug('Energy row %s: flops %d, fr %.4f, %s pJ'
                     % (row.layer, row.flops, float(row.fr), format_exact(row.energy_pj)))
        self.rows.append(row)

    def report(self):  # type: () -> EnergyReport
        return EnergyReport(self.rows, multi_bit=self.multi_bit)


def instrument(net, inputs):  # type: (Module, TArrayLike) -> EnergyReport
    """
    Runs one eval-mode forward pass over the batch and builds the energy report from measured firing rates
    :param net: Network
    :param inputs: Input batch, accepted by the network forward
    :return: EnergyReport
    """
    was_training = net.training
    inputs_static = not isinstance(inputs, SpikeTensor) and np.ndim(getattr(inputs, 'data', inputs)) == 4
    recorder = EnergyRecorder(static_input=inputs_static)
    net.eval()
    net.attach(recorder)
    try:
        with no_grad():
            net(inputs)
    finally:
        net.attach(None)
        net.train(was_training)

    report = recorder.report()
    if report.multi_bit:
        logger.warning('Multi-bit spikes detected, value 2 spikes are charged as two accumulations')
    logger.info('Energy: %.4g mJ spiking, %.4g mJ non-spiking equivalent' % (report.total_mj, report.ann_mj()))
    return report


def write_report_csv(report, path):  # type: (EnergyReport, str) -> None
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in report.rows:
            writer.writerow(row.to_dict())


def read_report_csv(path):  # type: (str) -> EnergyReport
    with open(path, 'r', newline='') as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError("Energy CSV '%s' must have columns %s" % (path, ','.join(CSV_COLUMNS)))
        rows = [EnergyRow.from_dict(data) for data in reader]
    return EnergyReport(rows, multi_bit=any(row.fr > 1 for row in rows))


def write_report_json(report, path):  # type: (EnergyReport, str) -> None
    with open(path, 'w') as f:
        json.dump(report.to_json(), f, indent=2)


def read_report_json(path):  # type: (str) -> EnergyReport
    with open(path, 'r') as f:
        return EnergyReport.from_json(json.load(f))
