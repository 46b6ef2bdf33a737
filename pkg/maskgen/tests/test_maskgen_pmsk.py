"""Archive writer compatibility.

The engine's loader is the oracle: everything the sidecar writes must
load, validate and round-trip bitwise over there.  One test goes
further and checks byte equality against the engine's own writer for
identical content, which pins the full binary layout, padding included.
"""

import numpy as np
import pytest
from phosvis import maskstore

from maskgen.pmskwriter import ArchiveContent, MaskRecord, write_archive, \
    write_dataset_sidecar


def random_content(rng, width, height, n_masks, with_labels=False) -> ArchiveContent:
    records = []
    for i in range(n_masks):
        bitmap = rng.random((height, width)) < rng.uniform(0.05, 0.6)
        label = f"object_{i}" if with_labels else ""
        shape = ("rectangle", "sphere", "cylinder", "other")[i % 4]
        records.append(MaskRecord(mask_id=i + 1, bitmap=bitmap,
                                  label=label, shape_class=shape))
    return ArchiveContent(image_id="scene_x", width=width, height=height,
                          records=records)


@pytest.mark.parametrize("width,height,n_masks", [
    (64, 64, 3),
    (37, 22, 5),   # width not a byte multiple exercises row padding
    (128, 40, 1),
    (8, 8, 0),
])
def test_engine_loads_and_validates_our_archives(tmp_path, width, height, n_masks):
    rng = np.random.default_rng(width * 1000 + height * 10 + n_masks)
    content = random_content(rng, width, height, n_masks, with_labels=True)
    path = tmp_path / "scene_x.pmsk"
    write_archive(path, content)

    archive = maskstore.load_archive(path)
    maskstore.validate_archive(archive)
    assert archive.image_id == "scene_x"
    assert (archive.width, archive.height) == (width, height)
    assert len(archive.masks) == n_masks
    for rec, mask in zip(content.records, archive.masks):
        assert mask.id == rec.mask_id
        assert mask.label == rec.label
        assert mask.shape_class == rec.shape_class
        np.testing.assert_array_equal(mask.bitmap, rec.bitmap)
        assert mask.area == int(rec.bitmap.sum())


def test_byte_identical_to_engine_writer(tmp_path):
    rng = np.random.default_rng(99)
    content = random_content(rng, 50, 30, 4, with_labels=True)
    ours = tmp_path / "ours.pmsk"
    write_archive(ours, content)

    entries = [
        maskstore.make_entry(r.mask_id, r.bitmap, label=r.label,
                             shape_class=r.shape_class)
        for r in content.records
    ]
    theirs = tmp_path / "theirs.pmsk"
    maskstore.save_archive(
        maskstore.MaskArchive(image_id="scene_x", width=50, height=30,
                              masks=entries),
        theirs,
    )
    assert ours.read_bytes() == theirs.read_bytes()


def test_sidecar_matches_engine_schema(tmp_path):
    path = tmp_path / "scene_x.json"
    write_dataset_sidecar(path, "scene_x", source="scene_x.png",
                          target_labels=["mug", "bottle"])
    doc = maskstore.load_sidecar(path)
    assert doc["image_id"] == "scene_x"
    assert doc["source"] == "scene_x.png"
    assert doc["target_labels"] == ["bottle", "mug"]


def test_writer_guards(tmp_path):
    ok = np.zeros((4, 4), dtype=bool)
    with pytest.raises(ValueError, match="shape"):
        write_archive(tmp_path / "a.pmsk", ArchiveContent(
            image_id="x", width=5, height=4,
            records=[MaskRecord(mask_id=1, bitmap=ok)],
        ))
    with pytest.raises(ValueError, match="duplicate"):
        write_archive(tmp_path / "b.pmsk", ArchiveContent(
            image_id="x", width=4, height=4,
            records=[MaskRecord(mask_id=1, bitmap=ok),
                     MaskRecord(mask_id=1, bitmap=ok)],
        ))
    with pytest.raises(ValueError, match="shape_class"):
        MaskRecord(mask_id=1, bitmap=ok, shape_class="pyramid")
    with pytest.raises(ValueError, match="dimensions"):
        write_archive(tmp_path / "c.pmsk", ArchiveContent(
            image_id="x", width=0, height=4, records=[],
        ))
