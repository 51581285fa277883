import pytest

from headforge import tomlmini
from headforge.errors import TaxonomyError
from headforge.taxonomy import LabelTaxonomy, MorphRule, load_taxonomy


def test_tomlmini_parses_tables_arrays_and_inline_tables():
    doc = tomlmini.loads(
        """
        # top comment
        title = "demo"
        count = 3
        ratio = 0.25
        flags = [true, false]  # trailing comment

        [nested.section]
        values = [1, 2,
                  3]
        rule = {name = "a", ids = [0, 1]}
        """
    )
    assert doc["title"] == "demo"
    assert doc["count"] == 3
    assert doc["ratio"] == 0.25
    assert doc["flags"] == [True, False]
    assert doc["nested"]["section"]["values"] == [1, 2, 3]
    assert doc["nested"]["section"]["rule"] == {"name": "a", "ids": [0, 1]}


def test_tomlmini_rejects_duplicate_keys():
    with pytest.raises(ValueError, match="duplicate"):
        tomlmini.loads("a = 1\na = 2\n")


def test_tomlmini_rejects_garbage():
    with pytest.raises(ValueError):
        tomlmini.loads("a = ???\n")


def test_taxonomy_requires_dense_ids():
    with pytest.raises(TaxonomyError):
        LabelTaxonomy(classes=((0, "bg"), (2, "a")), raw_to_class={0: 0})


def test_taxonomy_rejects_rule_with_unknown_class():
    with pytest.raises(TaxonomyError):
        LabelTaxonomy(
            classes=((0, "bg"), (1, "a")),
            raw_to_class={0: 0, 1: 1},
            morph_rules=(MorphRule(source=1, mode="dilate", neighbors=(5,)),),
        )


def test_taxonomy_rejects_bad_mode():
    with pytest.raises(TaxonomyError):
        LabelTaxonomy(
            classes=((0, "bg"), (1, "a")),
            raw_to_class={0: 0},
            morph_rules=(MorphRule(source=1, mode="open", neighbors=(0,)),),
        )


def test_load_taxonomy_from_toml(tmp_path):
    path = tmp_path / "tax.toml"
    path.write_text(
        """
        classes = [
            {id = 0, name = "background"},
            {id = 1, name = "white_matter"},
            {id = 2, name = "gray_matter"},
        ]

        morph_rules = [
            {source = "white_matter", mode = "dilate", neighbors = ["gray_matter"]},
        ]

        [raw_to_class]
        0 = 0
        10 = "white_matter"
        20 = 2
        """
    )
    tax = load_taxonomy(path)
    assert tax.num_classes == 3
    assert tax.raw_to_class == {0: 0, 10: 1, 20: 2}
    assert tax.morph_rules[0].source == 1
    assert tax.morph_rules[0].neighbors == (2,)


def test_load_taxonomy_from_json(tmp_path):
    path = tmp_path / "tax.json"
    path.write_text(
        '{"classes": [{"id": 0, "name": "bg"}, {"id": 1, "name": "a"}],'
        ' "raw_to_class": {"0": 0, "7": 1}, "morph_rules": []}'
    )
    tax = load_taxonomy(path)
    assert tax.raw_to_class == {0: 0, 7: 1}


def test_taxonomy_roundtrips_through_dict(small_taxonomy):
    from headforge.taxonomy import taxonomy_from_dict

    again = taxonomy_from_dict(small_taxonomy.to_dict())
    assert again == small_taxonomy
