### Image fidelity metrics for images with values in [0,1]

import numpy as np
from skimage.metrics import structural_similarity

from ..util.utils import ShapeError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5  # structural_similarity default; radius 5, an 11x11 window
SSIM_RADIUS = int(SSIM_TRUNCATE * SSIM_SIGMA + 0.5)
PSNR_CAP = 99.0

def _check_pair(a, b, name):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError("{}: image shapes differ, {} vs {}".format(name, a.shape, b.shape))
    return a, b

def luma(image):
    """ITU-R 601 luma of an [H,W,3] image; [H,W] and [H,W,1] images are returned as [H,W]"""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3 and image.shape[2] == 3:
        return image @ LUMA_WEIGHTS
    if image.ndim == 3 and image.shape[2] == 1:
        return image[:, :, 0]
    if image.ndim == 2:
        return image
    raise ShapeError("luma: expected a [H,W], [H,W,1] or [H,W,3] image, got {}".format(image.shape))

def psnr(a, b):
    """10*log10(1/MSE) in dB over all pixels and channels; identical images give inf"""
    a, b = _check_pair(a, b, "psnr")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float('inf')
    return float(10.0 * np.log10(1.0 / mse))

def psnr_y(a, b):
    """PSNR on the luma channel"""
    a, b = _check_pair(a, b, "psnr_y")
    return psnr(luma(a), luma(b))

def cap_psnr(value):
    """Finite stand-in for inf PSNR in written reports"""
    return min(float(value), PSNR_CAP)

def ssim(a, b):
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), computed on luma for colour images.
        Only window positions lying fully inside the image contribute.
    """
    a, b = _check_pair(a, b, "ssim")
    a, b = luma(a), luma(b)
    window = 2 * SSIM_RADIUS + 1
    if min(a.shape) < window:
        raise ShapeError("ssim: image of {} is smaller than the {}x{} window".format(a.shape, window, window))
    return float(structural_similarity(a, b, data_range=1.0, gaussian_weights=True, sigma=SSIM_SIGMA,
                                       use_sample_covariance=False))
