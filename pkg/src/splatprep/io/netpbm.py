"""Binary PPM (P6) images and PGM (P5) label rasters, maxval 255 only."""

from dataclasses import dataclass

import numpy as np

from ..errors import FormatError, ValidationError


@dataclass(frozen=True)
class Image:
    """8-bit RGB raster, pixels row-major (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        object.__setattr__(self, "pixels", px)
        if px.shape != (self.height, self.width, 3):
            raise ValidationError(
                f"pixel array {px.shape} does not match {self.height}x{self.width}x3")

    @classmethod
    def from_array(cls, pixels) -> "Image":
        px = np.ascontiguousarray(pixels, dtype=np.uint8)
        return cls(width=px.shape[1], height=px.shape[0], pixels=px)


@dataclass(frozen=True)
class LabelRaster:
    """8-bit category-id raster (0 = background), row-major (height, width)."""

    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self):
        lb = np.ascontiguousarray(self.labels, dtype=np.uint8)
        object.__setattr__(self, "labels", lb)
        if lb.shape != (self.height, self.width):
            raise ValidationError(
                f"label array {lb.shape} does not match {self.height}x{self.width}")

    @classmethod
    def from_array(cls, labels) -> "LabelRaster":
        lb = np.ascontiguousarray(labels, dtype=np.uint8)
        return cls(width=lb.shape[1], height=lb.shape[0], labels=lb)


def _read_netpbm(path, magic: bytes, channels: int):
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] != magic:
        raise FormatError(f"{path}: expected {magic.decode()} magic at byte 0, got {raw[:2]!r}")
    # Header tokens: width, height, maxval; '#' comments run to end of line.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        if pos >= len(raw):
            raise FormatError(f"{path}: header truncated at byte {pos}")
        c = raw[pos:pos + 1]
        if c == b"#":
            nl = raw.find(b"\n", pos)
            if nl < 0:
                raise FormatError(f"{path}: unterminated comment at byte {pos}")
            pos = nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(raw) and not raw[end:end + 1].isspace():
                end += 1
            tok = raw[pos:end]
            if not tok.isdigit():
                raise FormatError(f"{path}: non-numeric header token {tok!r} at byte {pos}")
            tokens.append(int(tok))
            pos = end
    width, height, maxval = tokens
    if maxval != 255:
        raise FormatError(f"{path}: maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise FormatError(f"{path}: expected single whitespace before pixel data at byte {pos}")
    pos += 1
    need = width * height * channels
    have = len(raw) - pos
    if have < need:
        raise FormatError(f"{path}: truncated at byte {len(raw)}: need {need} pixel bytes, have {have}")
    data = np.frombuffer(raw, dtype=np.uint8, count=need, offset=pos)
    return width, height, data


def read_image(path) -> Image:
    width, height, data = _read_netpbm(path, b"P6", 3)
    return Image(width, height, data.reshape(height, width, 3))


def write_image(image: Image, path):
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (image.width, image.height))
        f.write(image.pixels.tobytes())


def read_label_raster(path) -> LabelRaster:
    width, height, data = _read_netpbm(path, b"P5", 1)
    return LabelRaster(width, height, data.reshape(height, width))


def write_label_raster(raster: LabelRaster, path):
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (raster.width, raster.height))
        f.write(raster.labels.tobytes())
