#!/usr/bin/env python3
"""Build the binary test fonts under tests/data with fontTools.

The fonts are committed; rerun this only when a fixture changes:

    python3 tests/scripts/make_fixtures.py tests/data
"""
import struct
import sys
from pathlib import Path

from fontTools.fontBuilder import FontBuilder
from fontTools.pens.t2CharStringPen import T2CharStringPen
from fontTools.pens.ttGlyphPen import TTGlyphPen
from fontTools.ttLib import TTFont
from fontTools.ttLib.tables._g_l_y_f import Glyph, GlyphComponent, GlyphCoordinates


def simple(contours):
    """contours: list of [(x, y, on_curve)]"""
    g = Glyph()
    coords, flags, ends = [], [], []
    for c in contours:
        for x, y, on in c:
            coords.append((x, y))
            flags.append(1 if on else 0)
        ends.append(len(coords) - 1)
    g.coordinates = GlyphCoordinates(coords)
    g.flags = bytearray(flags)
    g.endPtsOfContours = ends
    g.numberOfContours = len(ends)
    g.program = None
    from fontTools.ttLib.tables import ttProgram
    g.program = ttProgram.Program()
    g.program.fromBytecode(b"")
    return g


def composite(parts):
    """parts: list of (glyph_name, dx, dy, transform-or-None)"""
    g = Glyph()
    g.numberOfContours = -1
    g.components = []
    for name, dx, dy, tr in parts:
        c = GlyphComponent()
        c.glyphName = name
        c.x, c.y = dx, dy
        c.flags = 0x0002  # ARGS_ARE_XY_VALUES
        if tr is not None:
            c.transform = tr
        g.components.append(c)
    return g


def empty():
    g = Glyph()
    g.numberOfContours = 0
    return g


TRIANGLE = [[(100, 0, True), (500, 0, True), (300, 600, True)]]
SQUARE = [[(100, 100, True), (600, 100, True), (600, 600, True), (100, 600, True)]]
# Two consecutive off-curve points between on-curve points.
CURVE = [[(0, 0, True), (100, 200, False), (300, 400, False), (500, 0, True)]]
TWO_CONTOURS = [
    [(100, 100, True), (700, 100, True), (700, 700, True), (100, 700, True)],
    [(300, 300, True), (300, 500, False), (500, 500, True), (500, 300, False)],
]
# Contour that starts off-curve and ends on a curved closing edge.
OFF_START = [[(300, 700, False), (500, 700, True), (500, 100, True), (100, 100, True), (100, 700, False)]]
# Every point off-curve: the whole contour is implied on-curve midpoints.
ALL_OFF = [[(500, 100, False), (900, 500, False), (500, 900, False), (100, 500, False)]]


def build_basic(path):
    fb = FontBuilder(1000, isTTF=True)
    order = [".notdef", "A"]
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap({0x41: "A"})
    fb.setupGlyf({".notdef": empty(), "A": simple(TRIANGLE)})
    fb.setupHorizontalMetrics({n: (600, 0) for n in order})
    fb.setupHorizontalHeader(ascent=800, descent=-200)
    fb.setupNameTable({"familyName": "GlyphformerBasic", "styleName": "Regular"})
    fb.setupOS2()
    fb.setupPost()
    fb.save(path)


def build_rich(path):
    fb = FontBuilder(1000, isTTF=True)
    glyphs = {
        ".notdef": empty(),
        "space": empty(),
        "A": simple(TRIANGLE),
        "B": simple(SQUARE),
        "C": simple(CURVE),
        "D": simple(TWO_CONTOURS),
        "E": composite([("A", 100, 0, None)]),
        "F": composite([("B", 10, -20, [[0.5, 0.0], [0.0, 0.75]]), ("A", 0, 0, [[0.0, 1.0], [-1.0, 0.0]])]),
        "G": composite([("E", 0, 50, None), ("C", 200, 0, None)]),
        "O": simple(ALL_OFF),
        "S": simple(OFF_START),
        "smiley": simple(CURVE),
    }
    order = list(glyphs)
    cmap = {
        0x20: "space",
        0x41: "A",
        0x42: "B",
        0x43: "C",
        0x44: "D",
        0x45: "E",
        0x46: "F",
        0x47: "G",
        0x4F: "O",
        0x53: "S",
        0x1F600: "smiley",
    }
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap(cmap)
    fb.setupGlyf(glyphs)
    fb.setupHorizontalMetrics({n: (1000, 0) for n in order})
    fb.setupHorizontalHeader(ascent=800, descent=-200)
    fb.setupNameTable({"familyName": "GlyphformerRich", "styleName": "Regular"})
    fb.setupOS2()
    fb.setupPost()
    fb.save(path)


def build_cyclic(path):
    """Composite glyph that references itself; needs a hand-written glyf entry."""
    fb = FontBuilder(1000, isTTF=True)
    order = [".notdef", "A", "loop"]
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap({0x41: "A", 0x4C: "loop"})
    fb.setupGlyf({".notdef": empty(), "A": simple(TRIANGLE), "loop": composite([("A", 0, 0, None)])})
    fb.setupHorizontalMetrics({n: (600, 0) for n in order})
    fb.setupHorizontalHeader(ascent=800, descent=-200)
    fb.setupNameTable({"familyName": "GlyphformerCyclic", "styleName": "Regular"})
    fb.setupOS2()
    fb.setupPost()
    fb.save(path)
    # Point the component of glyph 2 at glyph 2 itself.
    font = TTFont(path)
    raw = bytearray(open(path, "rb").read())
    glyf_off = font.reader.tables["glyf"].offset
    loca = font["loca"]
    start = glyf_off + loca[2]
    # 10-byte glyph header, then flags:uint16, glyphIndex:uint16
    struct.pack_into(">H", raw, start + 12, 2)
    font.close()
    open(path, "wb").write(raw)


def build_cff(path):
    fb = FontBuilder(1000, isTTF=False)
    order = [".notdef", "A"]
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap({0x41: "A"})
    charstrings = {}
    for name in order:
        pen = T2CharStringPen(600, None)
        if name == "A":
            pen.moveTo((100, 0))
            pen.lineTo((500, 0))
            pen.lineTo((300, 600))
            pen.closePath()
        charstrings[name] = pen.getCharString()
    fb.setupCFF("GlyphformerCFF", {"FullName": "GlyphformerCFF"}, charstrings, {})
    fb.setupHorizontalMetrics({n: (600, 0) for n in order})
    fb.setupHorizontalHeader(ascent=800, descent=-200)
    fb.setupNameTable({"familyName": "GlyphformerCFF", "styleName": "Regular"})
    fb.setupOS2()
    fb.setupPost()
    fb.save(path)


def build_blank(path):
    """Maps only a space: no usable glyph at all."""
    fb = FontBuilder(1000, isTTF=True)
    order = [".notdef", "space"]
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap({0x20: "space"})
    fb.setupGlyf({".notdef": empty(), "space": empty()})
    fb.setupHorizontalMetrics({n: (600, 0) for n in order})
    fb.setupHorizontalHeader(ascent=800, descent=-200)
    fb.setupNameTable({"familyName": "GlyphformerBlank", "styleName": "Regular"})
    fb.setupOS2()
    fb.setupPost()
    fb.save(path)


def toy_glyph(style, rng):
    """Boxy polygons or rounded blobs with randomized proportions."""
    if style == "boxes":
        x0, y0 = rng.randint(0, 200), rng.randint(-100, 100)
        w, h = rng.randint(200, 700), rng.randint(200, 800)
        notch = rng.randint(40, min(w, h) // 2)
        outer = [(x0, y0, True), (x0 + w, y0, True), (x0 + w, y0 + h - notch, True),
                 (x0 + w - notch, y0 + h, True), (x0, y0 + h, True)]
        contours = [outer]
        if rng.random() < 0.5:
            m = notch // 2 + 20
            contours.append([(x0 + m, y0 + m, True), (x0 + m, y0 + h - m, True),
                             (x0 + w - m, y0 + h - m, True), (x0 + w - m, y0 + m, True)])
        return simple(contours)
    cx, cy = rng.randint(300, 600), rng.randint(250, 550)
    rx, ry = rng.randint(120, 300), rng.randint(120, 350)
    n = rng.choice([4, 6, 8])
    import math
    pts = []
    for k in range(n):
        a = 2 * math.pi * k / n
        r = 1.0 + 0.25 * rng.random()
        pts.append((round(cx + rx * r * math.cos(a)), round(cy + ry * r * math.sin(a)), k % 2 == 0 and rng.random() < 0.5))
    return simple([pts])


def build_toy(path, style, count, family):
    import random
    rng = random.Random(1234 if style == "boxes" else 4321)
    glyphs = {".notdef": empty()}
    cmap = {}
    for k in range(count):
        name = "g%03d" % k
        glyphs[name] = toy_glyph(style, rng)
        cmap[0x4E00 + k] = name
    order = list(glyphs)
    fb = FontBuilder(1000, isTTF=True)
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap(cmap)
    fb.setupGlyf(glyphs)
    fb.setupHorizontalMetrics({n: (1000, 0) for n in order})
    fb.setupHorizontalHeader(ascent=800, descent=-200)
    fb.setupNameTable({"familyName": family, "styleName": "Regular"})
    fb.setupOS2()
    fb.setupPost()
    fb.save(path)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    out.mkdir(parents=True, exist_ok=True)
    build_basic(str(out / "basic.ttf"))
    build_rich(str(out / "rich.ttf"))
    build_cyclic(str(out / "cyclic.ttf"))
    build_cff(str(out / "cff.otf"))
    build_blank(str(out / "blank.ttf"))
    build_toy(str(out / "toy_boxes.ttf"), "boxes", 100, "GlyphformerBoxes")
    build_toy(str(out / "toy_blobs.ttf"), "blobs", 100, "GlyphformerBlobs")


if __name__ == "__main__":
    main()
