import pytest
from hypothesis import given, settings, strategies as st

from cadsynth.boxes import BBox
from cadsynth.errors import MalformedAnnotation
from cadsynth.voc import Annotation, VocObject, parse_voc_xml, write_voc_xml

from oracles import minimal_voc_read


def _ann(objects, width=640, height=480, filename="img_000000.png"):
    return Annotation(filename=filename, width=width, height=height,
                      objects=tuple(objects))


def test_full_frame_conversion():
    xml = write_voc_xml(_ann([VocObject("target", BBox(0, 0, 640, 480))]))
    _, _, _, objects = minimal_voc_read(xml)
    assert objects[0][1:5] == (1, 1, 640, 480)


def test_one_pixel_box_conversion():
    xml = write_voc_xml(_ann([VocObject("target", BBox(3, 7, 4, 8))]))
    _, _, _, objects = minimal_voc_read(xml)
    assert objects[0][1:5] == (4, 8, 4, 8)


def test_round_trip_identity():
    ann = _ann([VocObject("target", BBox(10, 20, 100, 200)),
                VocObject("other", BBox(0, 0, 5, 5), difficult=True)])
    assert parse_voc_xml(write_voc_xml(ann)) == ann


def test_agrees_with_independent_reader(small_dataset):
    out, _, manifest = small_dataset
    for entry in manifest.entries:
        data = (out / entry.annotation).read_bytes()
        ann = parse_voc_xml(data)
        filename, width, height, objects = minimal_voc_read(data)
        assert (ann.filename, ann.width, ann.height) == (filename, width, height)
        assert len(ann.objects) == len(objects)
        for obj, (name, xmin, ymin, xmax, ymax, difficult) in zip(ann.objects, objects):
            assert obj.name == name
            assert obj.difficult == difficult
            assert obj.bbox == BBox(xmin - 1, ymin - 1, xmax, ymax)


def test_degenerate_bndbox_rejected():
    xml = write_voc_xml(_ann([VocObject("t", BBox(4, 4, 10, 10))]))
    bad = xml.replace(b"<xmin>5</xmin>", b"<xmin>10</xmin>")
    bad = bad.replace(b"<xmax>10</xmax>", b"<xmax>5</xmax>")
    with pytest.raises(MalformedAnnotation):
        parse_voc_xml(bad)


def test_missing_size_rejected():
    xml = write_voc_xml(_ann([VocObject("t", BBox(4, 4, 10, 10))]))
    start = xml.index(b"<size>")
    end = xml.index(b"</size>") + len(b"</size>")
    with pytest.raises(MalformedAnnotation):
        parse_voc_xml(xml[:start] + xml[end:])


def test_non_integer_coordinate_rejected():
    xml = write_voc_xml(_ann([VocObject("t", BBox(4, 4, 10, 10))]))
    with pytest.raises(MalformedAnnotation):
        parse_voc_xml(xml.replace(b"<xmin>5</xmin>", b"<xmin>5.5</xmin>"))


def test_not_xml_rejected():
    with pytest.raises(MalformedAnnotation):
        parse_voc_xml(b"plainly not xml")
    with pytest.raises(MalformedAnnotation):
        parse_voc_xml(b"<wrongroot></wrongroot>")


def test_tolerates_extra_voc_fields():
    xml = (b"<annotation><filename>a.png</filename>"
           b"<source><database>x</database></source>"
           b"<size><width>100</width><height>50</height><depth>3</depth></size>"
           b"<segmented>0</segmented>"
           b"<object><name>part</name><pose>Left</pose><truncated>1</truncated>"
           b"<difficult>0</difficult>"
           b"<bndbox><xmin>1</xmin><ymin>1</ymin><xmax>10</xmax><ymax>10</ymax></bndbox>"
           b"</object></annotation>")
    ann = parse_voc_xml(xml)
    assert ann.objects[0].bbox == BBox(0, 0, 10, 10)


def test_box_outside_image_rejected():
    with pytest.raises(MalformedAnnotation):
        write_voc_xml(_ann([VocObject("t", BBox(0, 0, 641, 480))]))


def test_empty_class_name_rejected():
    with pytest.raises(MalformedAnnotation):
        write_voc_xml(_ann([VocObject("", BBox(0, 0, 10, 10))]))


@st.composite
def annotations(draw):
    width = draw(st.integers(min_value=4, max_value=4000))
    height = draw(st.integers(min_value=4, max_value=4000))
    n = draw(st.integers(min_value=0, max_value=6))
    objects = []
    for _ in range(n):
        xmin = draw(st.integers(min_value=0, max_value=width - 1))
        ymin = draw(st.integers(min_value=0, max_value=height - 1))
        xmax = draw(st.integers(min_value=xmin + 1, max_value=width))
        ymax = draw(st.integers(min_value=ymin + 1, max_value=height))
        name = draw(st.text(alphabet="abcdefghij_", min_size=1, max_size=12))
        difficult = draw(st.booleans())
        objects.append(VocObject(name, BBox(xmin, ymin, xmax, ymax), difficult))
    stem = draw(st.text(alphabet="abcdefghij0123456789_", min_size=1, max_size=16))
    return Annotation(filename=f"{stem}.png", width=width, height=height,
                      objects=tuple(objects))


@settings(max_examples=200)
@given(annotations())
def test_round_trip_property(ann):
    assert parse_voc_xml(write_voc_xml(ann)) == ann
