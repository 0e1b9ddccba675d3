from .manifests import (Box2D, CategoryPalette, DetectionBoxSet, read_boxes,
                        read_cameras, read_palette, write_boxes,
                        write_cameras, write_palette)
from .netpbm import (Image, LabelRaster, read_image, read_label_raster,
                     write_image, write_label_raster)
from .ply import read_gaussian_ply, write_gaussian_ply

__all__ = [
    "Box2D", "CategoryPalette", "DetectionBoxSet", "Image", "LabelRaster",
    "read_boxes", "read_cameras", "read_gaussian_ply", "read_image",
    "read_label_raster", "read_palette", "write_boxes", "write_cameras",
    "write_gaussian_ply", "write_image", "write_label_raster", "write_palette",
]
