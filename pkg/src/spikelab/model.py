"""
This file contains architecture specs, input encoders and the assembled network.
A network is a list of stages (patch embed + blocks) followed by a rate-readout classifier head.
"""
import logging
from collections import OrderedDict
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import Config, format_config, parse_config
from .exceptions import ConfigError, DomainError, ShapeError
from .layers import AbstractPatchEmbed, AbstractShortcut, AbstractTokenMixer, Block, LIFNode, Linear, Module, \
    ModuleList, PatchEmbed, Recorder, SpikeTensor, TransmissionAudit, carry_domain
from .neuron import NeuronParams, run_sequence
from .numcore import Tensor, as_tensor, no_grad, tensor_mean
from .types import TArrayLike, TShortcutKind, TStateDict
from .utils import make_rng

__all__ = ['StageSpec', 'ArchSpec', 'PRESETS', 'PUBLISHED_PARAM_COUNTS', 'Stage', 'Network', 'EventStream',
           'encode_static', 'repeat_frames', 'bin_events', 'build', 'param_count', 'check_param_count',
           'check_shortcut_plan', 'save_checkpoint', 'load_checkpoint']

logger = logging.getLogger('spikelab')

MIN_STAGES = 1
MAX_STAGES = 3
HOT_PIXEL_SIGMAS = 5.0

# Downsampling factor of the patch embed in the first stage and in every later one
FIRST_STAGE_FACTOR = 4
LATER_STAGE_FACTOR = 2

# Raw pixels in [0, 1] drive the first embed LIF, whose membrane settles at the pixel value
DEFAULT_V_TH = 0.5


class StageSpec(object):
    __slots__ = ['patch_embed', 'token_mixer', 'blocks', 'channels', 'shortcut']

    def __init__(self, patch_embed, token_mixer, blocks, channels, shortcut=None):
        # type: (str, str, int, int, Optional[str]) -> None
        self.patch_embed = str(patch_embed).strip().lower()
        self.token_mixer = str(token_mixer).strip().lower()
        self.blocks = int(blocks)
        self.channels = int(channels)
        self.shortcut = shortcut.strip().lower() if shortcut else None

    def validate(self):  # type: () -> None
        AbstractPatchEmbed.get_patch_embed_by_name(self.patch_embed)
        AbstractTokenMixer.parse_name(self.token_mixer)
        if self.shortcut is not None:
            AbstractShortcut.get_shortcut_by_name(self.shortcut)
        if self.blocks < 1:
            raise ValueError("Stage must have at least 1 block, got %d" % self.blocks)
        if self.channels < 1:
            raise ValueError("Stage channels must be positive, got %d" % self.channels)

    def _key(self):
        return tuple(getattr(self, name) for name in self.__slots__)

    def __eq__(self, other):
        return isinstance(other, StageSpec) and self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'StageSpec(%r, %r, blocks=%d, channels=%d, shortcut=%r)' % self._key()


class ArchSpec(object):
    """
    Declarative network description. Can be read from and written to a config text losslessly.
    """
    __slots__ = ['name', 'stages', 'timesteps', 'num_classes', 'input_channels', 'input_height', 'input_width',
                 'beta', 'v_th', 'surrogate_alpha', 'neuron', 'mlp_ratio', 'ssa_scale', 'shortcut']

    # Keys of the [model] section with their converters
    _MODEL_FIELDS = OrderedDict([
        ('name', str), ('timesteps', int), ('num_classes', int), ('input_channels', int), ('input_height', int),
        ('input_width', int), ('beta', float), ('v_th', float), ('surrogate_alpha', float), ('neuron', str),
        ('mlp_ratio', float), ('ssa_scale', float), ('shortcut', str)
    ])

    def __init__(self, stages, timesteps=4, num_classes=10, input_channels=3, input_height=32, input_width=32,
                 beta=0.25, v_th=DEFAULT_V_TH, surrogate_alpha=2.0, neuron='lif', mlp_ratio=4.0, ssa_scale=0.125,
                 shortcut='membrane', name='custom'):
        # type: (Sequence[StageSpec], int, int, int, int, int, float, float, float, str, float, float, str, str) -> None
        self.name = name
        self.stages = list(stages)
        self.timesteps = int(timesteps)
        self.num_classes = int(num_classes)
        self.input_channels = int(input_channels)
        self.input_height = int(input_height)
        self.input_width = int(input_width)
        self.beta = float(beta)
        self.v_th = float(v_th)
        self.surrogate_alpha = float(surrogate_alpha)
        self.neuron = neuron
        self.mlp_ratio = float(mlp_ratio)
        self.ssa_scale = float(ssa_scale)
        self.shortcut = shortcut

    def validate(self):  # type: () -> ArchSpec
        """
        :return: self
        :raises ValueError: If any field is out of range or names an unknown component
        :raises ConfigError: If shortcut placement sends ternary spikes where they can't be consumed
        """
        if not MIN_STAGES <= len(self.stages) <= MAX_STAGES:
            raise ValueError("Architecture must have %d..%d stages, got %d" % (MIN_STAGES, MAX_STAGES,
                                                                               len(self.stages)))
        for stage in self.stages:
            stage.validate()
        for name in ('timesteps', 'num_classes', 'input_channels', 'input_height', 'input_width'):
            if getattr(self, name) < 1:
                raise ValueError("%s must be positive, got %d" % (name, getattr(self, name)))
        if self.mlp_ratio <= 0:
            raise ValueError("mlp_ratio must be positive, got %r" % self.mlp_ratio)
        AbstractShortcut.get_shortcut_by_name(self.shortcut)
        check_shortcut_plan(self.shortcut_plan())
        self.neuron_params()
        return self

    def shortcut_plan(self):  # type: () -> List[List[str]]
        """
        Shortcut kind of every sub-block, grouped by stage
        """
        plan = []
        for stage in self.stages:
            per_block = 1 if AbstractTokenMixer.parse_name(stage.token_mixer)[0].is_identity else 2
            plan.append([stage.shortcut or self.shortcut] * (per_block * stage.blocks))
        return plan

    def neuron_params(self):  # type: () -> NeuronParams
        return NeuronParams(beta=self.beta, v_th=self.v_th, kind=self.neuron, surrogate_alpha=self.surrogate_alpha)

    def replace(self, **changes):  # type: (**Any) -> ArchSpec
        values = {name: getattr(self, name) for name in self.__slots__}
        values.update(changes)
        values['stages'] = [StageSpec(*s._key()) for s in values['stages']]
        return ArchSpec(**values)

    def with_mixers(self, mixer):  # type: (str) -> ArchSpec
        """
        Copy with every stage token mixer replaced
        """
        return self.replace(stages=[StageSpec(s.patch_embed, mixer, s.blocks, s.channels, s.shortcut)
                                    for s in self.stages])

    def with_embeds(self, patch_embed, first_stage=False):  # type: (str, bool) -> ArchSpec
        """
        Copy with patch embeds of stages after the first (or all stages) replaced
        """
        return self.replace(stages=[
            StageSpec(patch_embed if (i > 0 or first_stage) else s.patch_embed, s.token_mixer, s.blocks, s.channels,
                      s.shortcut)
            for i, s in enumerate(self.stages)
        ])

    def stage_factor(self, index):  # type: (int) -> int
        return FIRST_STAGE_FACTOR if index == 0 else LATER_STAGE_FACTOR

    @classmethod
    def preset(cls, name):  # type: (str) -> ArchSpec
        if name not in PRESETS:
            raise ValueError("Preset with name '%s' doesn't exist" % name)
        return PRESETS[name].replace()

    @classmethod
    def from_config(cls, config):  # type: (Config) -> ArchSpec
        """
        Reads [model] and [stage.N] sections. [model] preset = <name> starts from a preset,
        explicit keys override it. Stage sections override preset stages field by field.
        :raises ConfigError: On missing or invalid values, pointing to the line they came from
        """
        preset_name = config.get('model', 'preset')
        if preset_name is not None:
            config.check('model', 'preset', preset_name in PRESETS, "must be one of %s" % ', '.join(sorted(PRESETS)))
            spec = cls.preset(preset_name)
        else:
            spec = None

        values = {} if spec is None else {name: getattr(spec, name) for name in cls.__slots__}
        for key, converter in cls._MODEL_FIELDS.items():
            if config.has('model', key):
                getter = {int: config.get_int, float: config.get_float, str: config.get}[converter]
                values[key] = getter('model', key)

        stages = [] if spec is None else list(spec.stages)
        for index, section in config.stage_sections():
            position = index - 1
            config.check(section, 'blocks', position <= len(stages),
                         "belongs to stage %d, but stage %d isn't defined" % (index, index - 1))
            base = stages[position] if position < len(stages) else None
            fields = {}
            for key in StageSpec.__slots__:
                if config.has(section, key):
                    fields[key] = config.get_int(section, key) if key in ('blocks', 'channels') \
                        else config.get(section, key)
                elif base is not None:
                    fields[key] = getattr(base, key)
                elif key != 'shortcut':
                    raise ConfigError("[%s] %s is required" % (section, key))
            stage = StageSpec(**fields)
            try:
                stage.validate()
            except ValueError as e:
                key = _guess_key(str(e), section, config)
                raise ConfigError("[%s] %s" % (section, e), config._lookup(section, key)[1] if key else None)
            if position < len(stages):
                stages[position] = stage
            else:
                stages.append(stage)

        if not stages:
            raise ConfigError("Architecture needs a preset or at least one [stage.N] section")
        values['stages'] = stages
        try:
            return cls(**values).validate()
        except (TypeError, ValueError) as e:
            key = _guess_key(str(e), 'model', config)
            raise ConfigError("[model] %s" % e, config._lookup('model', key)[1] if key else None)

    @classmethod
    def from_text(cls, text, source='<string>'):  # type: (str, str) -> ArchSpec
        return cls.from_config(parse_config(text, source=source))

    def config_sections(self):  # type: () -> List[Tuple[str, List[Tuple[str, Any]]]]
        sections = [('model', [(key, getattr(self, key)) for key in self._MODEL_FIELDS])]
        for index, stage in enumerate(self.stages, start=1):
            entries = [(key, getattr(stage, key)) for key in StageSpec.__slots__ if getattr(stage, key) is not None]
            sections.append(('stage.%d' % index, entries))
        return sections

    def to_text(self):  # type: () -> str
        return format_config(self.config_sections())

    def _key(self):
        return tuple((getattr(self, name) if name != 'stages' else tuple(s._key() for s in self.stages))
                     for name in self.__slots__)

    def __eq__(self, other):
        return isinstance(other, ArchSpec) and self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return '<ArchSpec %s: %d stages, T=%d, %d classes>' % (self.name, len(self.stages), self.timesteps,
                                                              self.num_classes)


def check_shortcut_plan(plan):  # type: (Sequence[Sequence[TShortcutKind]]) -> None
    """
    Checks shortcut kinds of all sub-blocks, grouped by stage. Ternary spikes may reach the classifier head,
    but neither a patch embed nor a membrane shortcut.
    :raises ConfigError: For a placement that can't run
    """
    for index, kinds in enumerate(plan, start=1):
        try:
            domain = carry_domain(kinds)
        except DomainError as e:
            raise ConfigError("stage %d shortcut: %s" % (index, e))
        if domain == 'ternary' and index < len(plan):
            raise ConfigError("stage %d shortcut sends ternary spikes into the stage %d patch embed, "
                              "pre-spike shortcuts can't end a stage before the last one" % (index, index + 1))


def _guess_key(message, section, config):  # type: (str, str, Config) -> Optional[str]
    """
    Finds a key of the section, mentioned in an error message, to report its line number
    """
    for key, value in config.items(section):
        if key in message or ("'%s'" % value) in message:
            return key
    return None


PRESETS = OrderedDict([
    ('tiny', ArchSpec([StageSpec('orig', 'identity', 1, 16), StageSpec('max', 'dwc-3', 1, 32),
                       StageSpec('max', 'ssa', 1, 64)],
                      timesteps=4, num_classes=2, input_channels=1, input_height=16, input_width=16, name='tiny')),
    ('cifar', ArchSpec([StageSpec('orig', 'identity', 1, 96), StageSpec('max', 'dwc-3', 1, 192),
                        StageSpec('max', 'ssa', 2, 384)],
                       timesteps=4, num_classes=100, input_channels=3, input_height=32, input_width=32,
                       name='cifar')),
    ('imagenet', ArchSpec([StageSpec('orig', 'dwc-7', 1, 96), StageSpec('max', 'dwc-5', 3, 192),
                           StageSpec('max', 'ssa', 7, 384)],
                          timesteps=4, num_classes=1000, input_channels=3, input_height=224, input_width=224,
                          name='imagenet')),
    ('neuromorphic', ArchSpec([StageSpec('max+', 'dwc-3', 1, 128), StageSpec('max', 'ssa', 1, 256)],
                              timesteps=16, num_classes=10, input_channels=2, input_height=64, input_width=64,
                              name='neuromorphic')),
])

# Reported model sizes, compared with a tolerance since exact internal widths are not published
PUBLISHED_PARAM_COUNTS = {'cifar': 6.57e6}


# Input encoding

def repeat_frames(image, timesteps):  # type: (Union[Tensor, TArrayLike], int) -> SpikeTensor
    """
    Repeats a static frame batch [B, C, H, W] over time. Result is the membrane-domain input current.
    """
    image = as_tensor(image)
    if timesteps < 1:
        raise ValueError("timesteps must be positive, got %d" % timesteps)
    if image.ndim != 4:
        raise ShapeError("Static input must have shape [B, C, H, W], got %s" % (image.shape,))
    frames = np.broadcast_to(image.data, (timesteps,) + image.shape).copy()
    return SpikeTensor(Tensor(frames), 'membrane')


def encode_static(image, timesteps, params):  # type: (Union[Tensor, TArrayLike], int, NeuronParams) -> SpikeTensor
    """
    Repeats the frame T times and passes it through LIF neurons, the way the first embed block encodes pixels
    :param image: Pixels in [0, 1] of shape [B, C, H, W]
    :param timesteps: T >= 1
    :param params: NeuronParams of the encoding neurons
    :return: Binary SpikeTensor [T, B, C, H, W]
    """
    data = as_tensor(image).data
    if data.size and (data.min() < 0 or data.max() > 1):
        raise ValueError("Pixel values must be in range [0, 1]")
    frames = repeat_frames(image, timesteps)
    spikes, _ = run_sequence(params, frames.data)
    return SpikeTensor(spikes, 'binary')


class EventStream(object):
    """
    Asynchronous events (x, y, t, p), sorted by timestamp on ingestion
    """
    __slots__ = ['x', 'y', 't', 'p']

    def __init__(self, x, y, t, p):  # type: (TArrayLike, TArrayLike, TArrayLike, TArrayLike) -> None
        x, y, p = (np.asarray(v, dtype=np.int64).reshape(-1) for v in (x, y, p))
        t = np.asarray(t, dtype=np.float64).reshape(-1)
        if not (len(x) == len(y) == len(t) == len(p)):
            raise ShapeError("Event arrays have different lengths: x=%d, y=%d, t=%d, p=%d"
                             % (len(x), len(y), len(t), len(p)))
        bad = np.flatnonzero((p != 0) & (p != 1))
        if bad.size:
            raise ValueError("Event %d has polarity %d, expected 0 or 1" % (bad[0], p[bad[0]]))
        order = np.argsort(t, kind='stable')
        self.x, self.y, self.t, self.p = x[order], y[order], t[order], p[order]

    @classmethod
    def from_arrays(cls, x, y, t, p):  # type: (TArrayLike, TArrayLike, TArrayLike, TArrayLike) -> EventStream
        return cls(x, y, t, p)

    @classmethod
    def from_events(cls, events):  # type: (Iterable[Tuple[int, int, float, int]]) -> EventStream
        events = list(events)
        if not events:
            return cls([], [], [], [])
        x, y, t, p = zip(*events)
        return cls(x, y, t, p)

    def __len__(self):
        return len(self.t)


def bin_events(stream, alpha, target_t, geometry, dt=1.0, t0=0.0, denoise=False):
    # type: (EventStream, int, int, Tuple[int, int], float, float, bool) -> Tensor
    """
    Histograms events into frames. Raw bin k holds events with t0 + k * dt <= t < t0 + (k + 1) * dt,
    output frame n sums raw bins alpha * n .. alpha * (n + 1) - 1.
    :param stream: EventStream
    :param alpha: Raw bins per output frame, >= 1
    :param target_t: Number of output frames
    :param geometry: Tuple (height, width)
    :param dt: Raw bin duration
    :param t0: Timestamp of raw bin 0 start
    :param denoise: If flag is set, pixels with total count above mean + 5 sigma are zeroed
    :return: Event counts Tensor [target_t, 2, height, width]
    :raises ValueError: If an event is out of bounds. Message names the event index.
    """
    if alpha < 1:
        raise ValueError("alpha must be at least 1, got %d" % alpha)
    if target_t < 1:
        raise ValueError("target_t must be positive, got %d" % target_t)
    if dt <= 0:
        raise ValueError("dt must be positive, got %r" % dt)
    height, width = geometry

    frames_index = np.floor((stream.t - t0) / dt).astype(np.int64) // alpha
    checks = (
        ((stream.x < 0) | (stream.x >= width), 'x coordinate %d is out of range [0, %d)', stream.x, width),
        ((stream.y < 0) | (stream.y >= height), 'y coordinate %d is out of range [0, %d)', stream.y, height),
        ((frames_index < 0) | (frames_index >= target_t), 'falls into frame %d, outside [0, %d)', frames_index,
         target_t),
    )
    for mask, message, values, bound in checks:
        bad = np.flatnonzero(mask)
        if bad.size:
            raise ValueError(("Event %d: " + message) % (bad[0], values[bad[0]], bound))

    frames = np.zeros((target_t, 2, height, width))
    np.add.at(frames, (frames_index, stream.p, stream.y, stream.x), 1.0)

    if denoise and len(stream):
        totals = frames.sum(axis=(0, 1))
        limit = totals.mean() + HOT_PIXEL_SIGMAS * totals.std()
        hot = totals > limit
        if hot.any():
            logger.warning('Removed %d hot pixels with %d events' % (hot.sum(), totals[hot].sum()))
            frames[:, :, hot] = 0.0

    return Tensor(frames)


# Network

class Stage(Module):
    def __init__(self, spec, in_channels, factor, params, arch, rng):
        # type: (StageSpec, int, int, NeuronParams, ArchSpec, np.random.Generator) -> None
        super(Stage, self).__init__()
        self.spec = spec
        shortcut_kind = spec.shortcut or arch.shortcut
        self.embed = PatchEmbed(spec.patch_embed, in_channels, spec.channels, factor, params, rng=rng)
        self.blocks = ModuleList(
            Block(spec.channels, spec.token_mixer, params, shortcut_kind=shortcut_kind, mlp_ratio=arch.mlp_ratio,
                  ssa_scale=arch.ssa_scale, rng=rng)
            for _ in range(spec.blocks)
        )

    def forward(self, carry):  # type: (SpikeTensor) -> SpikeTensor
        carry = self.embed(carry)
        for block in self.blocks:
            carry = block(carry)
        return carry


class Network(Module):
    def __init__(self, spec, seed=0):  # type: (ArchSpec, Optional[int]) -> None
        super(Network, self).__init__()
        spec.validate()
        rng = make_rng(seed)
        params = spec.neuron_params()
        self.spec = spec
        self.last_input_static = False

        stages = []
        in_channels = spec.input_channels
        for index, stage_spec in enumerate(spec.stages):
            stages.append(Stage(stage_spec, in_channels, spec.stage_factor(index), params, spec, rng))
            in_channels = stage_spec.channels
        self.stages = ModuleList(stages)
        self.head_lif = LIFNode(params)
        self.classifier = Linear(in_channels, spec.num_classes, rng=rng)

        self.assign_names()
        for index, stage in enumerate(self.stages, start=1):
            stage.embed.assign_names(stage=index, component='patch_embed')
            for block in stage.blocks:
                for component, sub_block in block.sub_blocks().items():
                    sub_block.assign_names(stage=index, component=component)
        self.head_lif.assign_names(component='classifier')
        self.classifier.assign_names(component='classifier')

    def _prepare(self, x):  # type: (Union[SpikeTensor, Tensor, TArrayLike]) -> SpikeTensor
        expected = (self.spec.input_channels, self.spec.input_height, self.spec.input_width)
        if isinstance(x, SpikeTensor):
            carry = x
        else:
            x = as_tensor(x)
            if x.ndim == 4:
                carry = repeat_frames(x, self.spec.timesteps)
            elif x.ndim == 5:
                carry = SpikeTensor(x, 'membrane')
            else:
                raise ShapeError("Network input must be [B, C, H, W] frames or [T, B, C, H, W] sequences, got %s"
                                 % (x.shape,))
        if len(carry.shape) != 5:
            raise ShapeError("Network input must be time-major [T, B, C, H, W], got %s" % (carry.shape,))
        if carry.shape[2:] != expected:
            raise ShapeError("Network expects input of geometry %s, got %s" % (expected, carry.shape[2:]))
        object.__setattr__(self, 'last_input_static', not isinstance(x, SpikeTensor) and x.ndim == 4)
        return carry

    def forward(self, x):  # type: (Union[SpikeTensor, Tensor, TArrayLike]) -> Tensor
        """
        :param x: Static frames [B, C, H, W] (repeated T times), frame sequences [T, B, C, H, W]
            or a prepared SpikeTensor
        :return: Logits [B, num_classes], averaged over timesteps
        """
        carry = self._prepare(x)
        for stage in self.stages:
            carry = stage(carry)

        s = self.head_lif(carry) if carry.domain == 'membrane' else carry
        if self.recorder is not None:
            self.recorder.transmit('head', s)
        self.classifier._record(s, self.classifier.describe())
        pooled = tensor_mean(s.data, axis=(3, 4))
        return tensor_mean(self.classifier(pooled), axis=0)

    def predict(self, x):  # type: (Union[SpikeTensor, Tensor, TArrayLike]) -> np.ndarray
        with no_grad():
            return self.forward(x).data.argmax(axis=-1)

    def sub_blocks(self, stage=None, block=None, position=None):
        # type: (Optional[int], Optional[int], Optional[str]) -> List[Module]
        """
        Sub-blocks filtered by 1-based stage index, 0-based block index and position ('token_mix' or 'mlp').
        Negative indices count from the end.
        """
        stages = list(self.stages)
        if stage is not None:
            stages = [stages[stage - 1 if stage > 0 else stage]]
        result = []
        for s in stages:
            blocks = list(s.blocks)
            if block is not None:
                blocks = [blocks[block]]
            for b in blocks:
                result.extend(sub for key, sub in b.sub_blocks().items() if position is None or key == position)
        return result

    def set_shortcut(self, kind, stage=None, block=None, position=None):
        # type: (TShortcutKind, Optional[int], Optional[int], Optional[str]) -> None
        selected = self.sub_blocks(stage=stage, block=block, position=position)
        if not selected:
            raise ValueError("No sub-block matches stage=%r, block=%r, position=%r" % (stage, block, position))
        previous = [sub_block.shortcut for sub_block in selected]
        for sub_block in selected:
            sub_block.set_shortcut(kind)
        try:
            check_shortcut_plan(self.shortcut_plan())
        except ConfigError:
            for sub_block, old in zip(selected, previous):
                sub_block.set_shortcut(old)
            raise

    def shortcut_plan(self):  # type: () -> List[List[AbstractShortcut]]
        return [[sub_block.shortcut for sub_block in self.sub_blocks(stage=index)]
                for index in range(1, len(self.stages) + 1)]

    def set_smooth(self, smooth=True):  # type: (bool) -> None
        for _, module in self.named_modules():
            if isinstance(module, LIFNode):
                module.smooth = bool(smooth)

    def audit(self, x):  # type: (Union[SpikeTensor, Tensor, TArrayLike]) -> TransmissionAudit
        """
        Runs a forward pass recording every inter-block transmission
        """
        audit = TransmissionAudit()
        with _attached(self, audit), no_grad():
            self.forward(x)
        return audit

    def stage_shapes(self):  # type: () -> List[Tuple[int, int, int]]
        """
        :return: A list of (channels, height, width) per stage output
        """
        height, width = self.spec.input_height, self.spec.input_width
        shapes = []
        for stage in self.stages:
            height, width = stage.embed.output_size(height, width)
            shapes.append((stage.spec.channels, height, width))
        return shapes


class _attached(object):
    """
    Context manager, attaching a recorder to all network modules
    """
    def __init__(self, net, recorder):  # type: (Module, Recorder) -> None
        self.net = net
        self.recorder = recorder

    def __enter__(self):
        self.net.attach(self.recorder)
        return self.recorder

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.net.attach(None)


def build(spec, seed=0):  # type: (ArchSpec, Optional[int]) -> Network
    """
    Builds a network from an ArchSpec. Parameter initialization is deterministic given the seed.
    :raises ValueError: If spec names unknown components
    """
    net = Network(spec, seed=seed)
    logger.info('Built %s network: stages %s, %d parameters'
                % (spec.name, ', '.join('%dx%dx%d' % shape for shape in net.stage_shapes()), param_count(net)))
    return net


def param_count(net):  # type: (Module) -> int
    """
    Learnable scalars: conv kernels, linear weights, BN affine and biases. Neuron constants are not parameters.
    """
    return net.num_parameters()


def check_param_count(net, reported=None, tolerance=0.15):  # type: (Network, Optional[float], float) -> bool
    """
    Compares the parameter count with a reported model size
    :return: True, if the count is within relative tolerance of the reported one
    """
    reported = reported if reported is not None else PUBLISHED_PARAM_COUNTS.get(net.spec.name)
    if reported is None:
        raise ValueError("No reported parameter count for '%s'" % net.spec.name)
    count = param_count(net)
    deviation = abs(count - reported) / float(reported)
    if deviation <= tolerance:
        logger.info('Parameter count %d is within %.0f%% of reported %.0f' % (count, 100 * tolerance, reported))
        return True
    logger.warning('Parameter count %d deviates %.1f%% from reported %.0f' % (count, 100 * deviation, reported))
    return False


_SPEC_KEY = '__spec__'


def save_checkpoint(net, path):  # type: (Network, str) -> None
    """
    Stores the state dict and the architecture text into a numpy .npz archive
    """
    state = net.state_dict()
    state[_SPEC_KEY] = np.array(net.spec.to_text())
    with open(path, 'wb') as f:
        np.savez(f, **state)
    logger.info('Saved checkpoint %s' % path)


def load_checkpoint(path, net=None):  # type: (str, Optional[Network]) -> Network
    """
    Restores a network from an .npz checkpoint
    :param path: Checkpoint path
    :param net: Network to load weights into. If not given, it is built from the stored spec.
    :return: Network with loaded weights
    """
    with np.load(path, allow_pickle=False) as archive:
        state = OrderedDict((key, archive[key]) for key in archive.files)  # type: TStateDict
    spec_text = str(state.pop(_SPEC_KEY)) if _SPEC_KEY in state else None
    if net is None:
        if spec_text is None:
            raise ValueError("Checkpoint '%s' has no architecture, pass a network to load it into" % path)
        net = Network(ArchSpec.from_text(spec_text, source=path))
    net.load_state_dict(state)
    logger.debug('Loaded checkpoint %s' % path)
    return net
