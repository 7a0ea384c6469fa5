"""Энергия в полосе частот и атрибуция говорящего по аудиокадру.

Голос владельца очков доходит до микрофона и по воздуху, и через кость,
поэтому в полосе 0-1000 Гц у него заметно больше энергии, чем у собеседника.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from sear_hub.core.exceptions import ArgumentError
from sear_hub.core.models import Speaker
from sear_hub.core.validation import Violation, _join, _validate
from sear_hub.infra.settings import SettingsLoader


@dataclass(frozen=True, eq=False)
class AudioFrame:
    samples: np.ndarray
    sample_rate_hz: int = 16000
    start_ms: int = 0

    @property
    def duration_ms(self) -> float:
        return 1000.0 * len(self.samples) / self.sample_rate_hz

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.duration_ms

    def overlaps(self, start_ms: float, end_ms: float) -> bool:
        return self.start_ms < end_ms and start_ms < self.end_ms


@dataclass(frozen=True)
class SpeakerCalibration:
    ratio_threshold: float = 0.60
    silence_floor: float = 1e-6
    band_low_hz: float = 0.0
    band_high_hz: float = 1000.0

    def __post_init__(self):
        if not 0.0 < self.ratio_threshold < 1.0:
            raise ArgumentError("ratio_threshold", "должен лежать в (0, 1)")
        if not self.silence_floor > 0:
            raise ArgumentError("silence_floor", "должен быть положительным")

    @classmethod
    def from_settings(cls) -> SpeakerCalibration:
        settings = SettingsLoader()
        low, high = settings.get("SPEAKER_BAND_HZ")
        return cls(
            ratio_threshold=settings.get("SPEAKER_RATIO_THRESHOLD"),
            silence_floor=settings.get("SILENCE_FLOOR"),
            band_low_hz=low,
            band_high_hz=high,
        )

    @classmethod
    def fit(cls, primary_frames: Sequence[AudioFrame], other_frames: Sequence[AudioFrame],
            base: Optional[SpeakerCalibration] = None) -> SpeakerCalibration:
        """
        Калибровка под конкретного пользователя: порог - середина между
        средней долей полосы у его голоса и у чужих голосов.
        """
        base = base or cls.from_settings()

        def mean_fraction(frames):
            values = [compute_band_energy(f, base.band_low_hz, base.band_high_hz,
                                          base.silence_floor).band_fraction
                      for f in frames]
            if not values:
                raise ArgumentError("frames", "нужен хотя бы один кадр каждого класса")
            return float(np.mean(values))

        threshold = (mean_fraction(primary_frames) + mean_fraction(other_frames)) / 2
        threshold = min(max(threshold, 1e-3), 1 - 1e-3)
        return cls(threshold, base.silence_floor, base.band_low_hz, base.band_high_hz)


class BandEnergy(NamedTuple):
    band_energy: float
    total_energy: float
    band_fraction: float


def hann_window(n: int) -> np.ndarray:
    """Периодическое окно Ханна длины n."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def compute_band_energy(frame: AudioFrame, band_low_hz: float, band_high_hz: float,
                        silence_floor: Optional[float] = None) -> BandEnergy:
    """
    Энергия спектра в полосе [low, high] (границы включительно)
    и полная энергия до частоты Найквиста.
    """
    nyquist = frame.sample_rate_hz / 2
    if not 0 <= band_low_hz < band_high_hz <= nyquist:
        raise ArgumentError(
            "band", f"нужно 0 ≤ low < high ≤ {nyquist}, получено [{band_low_hz}, {band_high_hz}]")
    if silence_floor is None:
        silence_floor = SettingsLoader().get("SILENCE_FLOOR")

    samples = np.asarray(frame.samples, dtype=np.float64)
    n = len(samples)
    spectrum = np.fft.rfft(samples * hann_window(n))
    power = np.abs(spectrum) ** 2
    # k·fs/N без округления: при fs=16000, N=1024 граница 1000 Гц - ровно бин 64
    freqs = np.arange(len(power)) * frame.sample_rate_hz / n

    in_band = (freqs >= band_low_hz) & (freqs <= band_high_hz)
    band = float(power[in_band].sum())
    total = float(power.sum())
    if total < silence_floor:
        return BandEnergy(band, total, 0.0)
    return BandEnergy(band, total, min(1.0, band / total))


def attribute_speaker(frame: AudioFrame, cal: SpeakerCalibration) -> Speaker:
    energy = compute_band_energy(frame, cal.band_low_hz, cal.band_high_hz, cal.silence_floor)
    if energy.total_energy < cal.silence_floor:
        return Speaker.SILENCE
    if energy.band_fraction >= cal.ratio_threshold:
        return Speaker.PRIMARY
    return Speaker.OTHER


def frames_from_samples(samples: np.ndarray, frame_size: int, sample_rate_hz: int,
                        start_ms: int = 0) -> list[AudioFrame]:
    """Нарезает непрерывный сигнал на кадры фиксированной длины (хвост отбрасывается)."""
    frames = []
    for i in range(len(samples) // frame_size):
        chunk = np.asarray(samples[i * frame_size:(i + 1) * frame_size], dtype=np.float64)
        offset_ms = int(round(1000.0 * i * frame_size / sample_rate_hz))
        frames.append(AudioFrame(chunk, sample_rate_hz, start_ms + offset_ms))
    return frames


@_validate.register
def _(entity: AudioFrame, path: str, frame_size: Optional[int] = None,
      **context) -> Iterable[Violation]:
    out = []
    frame_size = frame_size or SettingsLoader().get("FRAME_SIZE")
    samples = np.asarray(entity.samples, dtype=np.float64)
    if samples.ndim != 1 or len(samples) != frame_size:
        out.append(Violation(_join(path, "samples"), f"length == N={frame_size}"))
    if not np.all(np.isfinite(samples)):
        out.append(Violation(_join(path, "samples"), "all samples finite"))
    elif samples.size and float(np.max(np.abs(samples))) > 1.0:
        out.append(Violation(_join(path, "samples"), "|s| ≤ 1"))
    if entity.start_ms < 0:
        out.append(Violation(_join(path, "startMs"), "startMs ≥ 0"))
    return out


@_validate.register
def _(entity: SpeakerCalibration, path: str, **context) -> Iterable[Violation]:
    out = []
    if not 0.0 < entity.ratio_threshold < 1.0:
        out.append(Violation(_join(path, "ratioThreshold"), "ratioThreshold ∈ (0,1)"))
    if not entity.silence_floor > 0:
        out.append(Violation(_join(path, "silenceFloor"), "silenceFloor > 0"))
    return out
