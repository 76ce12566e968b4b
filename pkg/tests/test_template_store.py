import numpy as np
import pytest

from biomatch import template_store
from biomatch.errors import (
    CapacityExceeded,
    CapacityExhausted,
    CorruptReason,
    CorruptStore,
    DimensionMismatch,
    DuplicateId,
    VariantMismatch,
)
from biomatch.spaces import MetricPoint, SpaceDescriptor, SpaceKind
from biomatch.template_store import Gallery, TemplateRecord, generate_id

EUCLIDEAN_4 = SpaceDescriptor(kind=SpaceKind.EUCLIDEAN, dimension=4)


class ScriptedRng:
    """Hands out a fixed sequence of byte strings."""

    def __init__(self, *draws: bytes):
        self.draws = list(draws)

    def bytes(self, size: int) -> bytes:
        draw = self.draws.pop(0)
        assert len(draw) == size
        return draw


def test_generate_id_length():
    identifier = generate_id(16, set(), np.random.default_rng(0))
    assert len(identifier) == 2


def test_generate_id_resamples_on_collision():
    used = b"\x00\x01"
    fresh = b"\x00\x02"
    assert generate_id(16, {used}, ScriptedRng(used, fresh)) == fresh


def test_generate_id_gives_up():
    used = b"\xaa\xbb"
    with pytest.raises(CapacityExhausted):
        generate_id(16, {used}, ScriptedRng(*([used] * template_store.MAX_ID_ATTEMPTS)))


def test_generated_ids_are_distinct():
    rng = np.random.default_rng(1)
    ids = set()
    for _ in range(1000):
        ids.add(generate_id(64, ids, rng))
    assert len(ids) == 1000


@pytest.mark.parametrize("lambda_bits", [8, 20, 0])
def test_lambda_must_be_whole_bytes_of_at_least_16_bits(lambda_bits):
    with pytest.raises(ValueError):
        template_store.check_lambda(lambda_bits)


def test_insert_lookup_remove():
    gallery = Gallery(EUCLIDEAN_4, 10, 64)
    point = MetricPoint.vector([0.1, -2.5, 3.0, 1e-300])
    record = TemplateRecord(b"\x01" * 8, point)
    gallery.insert(record)
    assert len(gallery) == 1
    assert record.identifier in gallery
    assert gallery.lookup(record.identifier).embedding == point
    assert gallery.lookup(b"\x02" * 8) is None
    assert gallery.remove(record.identifier)
    assert gallery.lookup(record.identifier) is None
    assert not gallery.remove(record.identifier)


def test_insert_into_full_gallery():
    gallery = Gallery(EUCLIDEAN_4, 1, 16)
    gallery.insert(TemplateRecord(b"\x00\x01", MetricPoint.vector([0, 0, 0, 0])))
    with pytest.raises(CapacityExceeded):
        gallery.insert(TemplateRecord(b"\x00\x02", MetricPoint.vector([0, 0, 0, 0])))
    assert len(gallery) == 1


def test_insert_duplicate_id():
    gallery = Gallery(EUCLIDEAN_4, 5, 16)
    gallery.insert(TemplateRecord(b"\x00\x01", MetricPoint.vector([0, 0, 0, 0])))
    with pytest.raises(DuplicateId):
        gallery.insert(TemplateRecord(b"\x00\x01", MetricPoint.vector([1, 1, 1, 1])))


def test_insert_checks_the_space():
    gallery = Gallery(EUCLIDEAN_4, 5, 16)
    with pytest.raises(DimensionMismatch):
        gallery.insert(TemplateRecord(b"\x00\x01", MetricPoint.vector([0, 0])))
    with pytest.raises(VariantMismatch):
        gallery.insert(TemplateRecord(b"\x00\x01", MetricPoint.bits("1010")))
    with pytest.raises(ValueError):
        gallery.insert(TemplateRecord(b"\x00\x01\x02", MetricPoint.vector([0, 0, 0, 0])))


def test_records_are_sorted_by_identifier():
    gallery = Gallery(EUCLIDEAN_4, 5, 16)
    for identifier in (b"\x09\x00", b"\x00\x05", b"\x03\x00"):
        gallery.insert(TemplateRecord(identifier, MetricPoint.vector([0, 0, 0, 0])))
    assert gallery.ids() == [b"\x00\x05", b"\x03\x00", b"\x09\x00"]


def test_random_operation_sequences_keep_ids_unique_and_within_capacity():
    rng = np.random.default_rng(17)
    for _ in range(50):
        capacity = int(rng.integers(1, 9))
        gallery = Gallery(EUCLIDEAN_4, capacity, 16)
        expected = {}
        for _ in range(60):
            op = int(rng.integers(4))
            point = MetricPoint.vector(rng.normal(size=4))
            if op == 0:
                identifier = generate_id(16, gallery.ids(), rng)
                if len(expected) < capacity:
                    gallery.insert(TemplateRecord(identifier, point))
                    expected[identifier] = point
                else:
                    with pytest.raises(CapacityExceeded):
                        gallery.insert(TemplateRecord(identifier, point))
            elif op == 1 and expected:
                reused = sorted(expected)[int(rng.integers(len(expected)))]
                with pytest.raises(DuplicateId):
                    gallery.insert(TemplateRecord(reused, point))
            elif op == 2 and expected:
                gone = sorted(expected)[int(rng.integers(len(expected)))]
                assert gallery.remove(gone)
                del expected[gone]
            else:
                identifier = rng.bytes(2)
                found = gallery.lookup(identifier)
                assert (found.embedding if found else None) == expected.get(identifier)
            ids = gallery.ids()
            assert len(ids) == len(set(ids)) == len(expected) <= capacity
            assert ids == sorted(expected)


def test_empty_gallery_round_trip(tmp_path):
    gallery = Gallery(EUCLIDEAN_4, 7, 32)
    path = tmp_path / "gallery.bmdb"
    template_store.save(gallery, path)
    assert template_store.load(path) == gallery


def test_euclidean_gallery_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    gallery = Gallery(EUCLIDEAN_4, 200, 64)
    for _ in range(100):
        identifier = generate_id(64, gallery.ids(), rng)
        gallery.insert(TemplateRecord(identifier, MetricPoint.vector(rng.normal(scale=1e3, size=4))))
    path = tmp_path / "gallery.bmdb"
    template_store.save(gallery, path)
    loaded = template_store.load(path)
    assert loaded == gallery
    for record in gallery:
        assert np.array_equal(loaded.lookup(record.identifier).embedding.data, record.embedding.data)


@pytest.mark.parametrize(
    "space, point",
    [
        (SpaceDescriptor(kind=SpaceKind.HAMMING, dimension=11), MetricPoint.bits("10110011101")),
        (SpaceDescriptor(kind=SpaceKind.LEVENSHTEIN, dimension=12), MetricPoint.symbols("kätzchen")),
        (SpaceDescriptor(kind=SpaceKind.COSINE, dimension=2), MetricPoint.vector([0.6, 0.8])),
    ],
)
def test_other_spaces_round_trip(space, point):
    gallery = Gallery(space, 3, 16)
    gallery.insert(TemplateRecord(b"\xbe\xef", point))
    loaded = template_store.decode_gallery(template_store.encode_gallery(gallery))
    assert loaded == gallery
    assert loaded.space.orientation == space.orientation


def test_corrupt_store_reasons():
    gallery = Gallery(EUCLIDEAN_4, 3, 16)
    gallery.insert(TemplateRecord(b"\x00\x01", MetricPoint.vector([1, 2, 3, 4])))
    data = template_store.encode_gallery(gallery)

    with pytest.raises(CorruptStore) as truncated:
        template_store.decode_gallery(data[:-5])
    assert truncated.value.reason == CorruptReason.TRUNCATED

    with pytest.raises(CorruptStore) as magic:
        template_store.decode_gallery(b"NOPE" + data[4:])
    assert magic.value.reason == CorruptReason.BAD_MAGIC

    with pytest.raises(CorruptStore) as version:
        template_store.decode_gallery(data[:4] + b"\x02\x00" + data[6:])
    assert version.value.reason == CorruptReason.BAD_VERSION

    with pytest.raises(CorruptStore) as trailing:
        template_store.decode_gallery(data + b"\x00")
    assert trailing.value.reason == CorruptReason.MALFORMED


def test_truncated_file_on_disk(tmp_path):
    gallery = Gallery(EUCLIDEAN_4, 3, 16)
    gallery.insert(TemplateRecord(b"\x00\x01", MetricPoint.vector([1, 2, 3, 4])))
    path = tmp_path / "gallery.bmdb"
    template_store.save(gallery, path)
    path.write_bytes(path.read_bytes()[:20])
    with pytest.raises(CorruptStore) as info:
        template_store.load(path)
    assert info.value.reason == CorruptReason.TRUNCATED
