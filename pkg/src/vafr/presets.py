"""Named per-eye display resolutions.

The pixel counts reproduce the ground-truth column of the usual
2K/4K/6K/8K/retinal comparison table exactly (e.g. 2K is 2560x1440,
3,686,400 pixels). ``1080p`` is kept separately for desk-scale runs.
"""

RESOLUTIONS = {
    "1080p": (1920, 1080),
    "2K": (2560, 1440),
    "4K": (3840, 2160),
    "6K": (5760, 3240),
    "8K": (7680, 4320),
    "retinal": (11520, 6480),
}

TABLE_PRESETS = ("2K", "4K", "6K", "8K", "retinal")


def parse_resolution(text):
    """Accept a preset name or ``WxH``."""
    if text in RESOLUTIONS:
        return RESOLUTIONS[text]
    w, sep, h = str(text).lower().partition("x")
    if not sep:
        raise ValueError(f"resolution must be a preset or WxH, got {text!r}")
    w, h = int(w), int(h)
    if w < 1 or h < 1:
        raise ValueError(f"resolution must be positive, got {text!r}")
    return w, h
