#!/usr/bin/env python3
"""Generates the bundled 24-sample toy QA dataset and lexicon.

The toy corpus is fully synthetic (fictional places, institutions, and
people) and is laid out to exercise every pipeline feature:

* 6 cells x 4 samples: fact_count {2,3,4} x type {bridge, comparison};
* every supporting document keeps at least two non-supporting sentences,
  so sentence replacement always has an in-document candidate;
* every supporting sentence names a context-document title, so entity
  masking always finds a span;
* every supporting sentence carries at least one lexicon adjective, so
  synonym/antonym replacement always hits.

Deterministic: no randomness; re-running reproduces the same bytes.
"""

import json
import os

ADJS = ["large", "old", "famous", "bright", "quiet", "modern"]

# (city, landmark, color, institute, founder, year)
WORLDS = [
    ("Valdorin", "Skyreach Tower", "crimson", "Miro Institute", "Elen Maris", "1921"),
    ("Norpeth", "Glasshollow Dome", "emerald", "Atrel Observatory", "Tomas Quell", "1887"),
    ("Sellbrook", "Ironquay Bridge", "cobalt", "Fenwick Archive", "Ruth Alden", "1904"),
    ("Thornmere", "Windmoor Gate", "amber", "Caldus Library", "Ivo Brant", "1869"),
    ("Eastgale", "Larkspur Hall", "scarlet", "Oriel Conservatory", "Mina Voss", "1932"),
    ("Duskvale", "Hollyford Keep", "violet", "Perrin Museum", "Jon Hale", "1876"),
    ("Westmoor", "Silverrun Aqueduct", "turquoise", "Galen Foundry", "Ada Thorne", "1890"),
    ("Northollow", "Redbarrow Mill", "golden", "Lumen Atelier", "Per Sondh", "1911"),
    ("Ashford-on-Lea", "Bellwether Spire", "ivory", "Corvid Seminary", "Lia Marsh", "1858"),
    ("Greyhaven", "Owlstone Arch", "sable", "Tiber Workshop", "Rolf Ivers", "1899"),
    ("Morrowfen", "Gullwing Pier", "coral", "Aster Academy", "Nils Farro", "1925"),
    ("Brackenholt", "Foxglove Terrace", "russet", "Helix Gallery", "Una Crale", "1867"),
]


def doc(title, sentences):
    return [title, sentences]


def bridge_sample(idx, fact_count, world_a, world_b):
    city_a, landmark_a, color_a, inst_a, founder_a, year_a = world_a
    city_b, landmark_b, color_b, inst_b, founder_b, year_b = world_b

    inst_doc = doc(inst_a, [
        f"The {inst_a} is a large research centre in {city_a}.",
        f"Its reading rooms are open to visiting scholars.",
        f"The archive wing holds regional survey maps.",
        f"A quiet annex was added behind the {inst_a} in later years.",
    ])
    city_doc = doc(city_a, [
        f"{city_a} lies in a wide valley between two rivers.",
        f"The old {landmark_a} in {city_a} is painted {color_a}.",
        f"Markets run along the river quay every week.",
        f"Ferries once linked {city_a} to the coast.",
    ])
    founder_doc = doc(founder_a, [
        f"{founder_a} was a famous surveyor born near {city_a}.",
        f"{founder_a} founded the {inst_a} in {year_a}.",
        f"Several field notebooks survive in private hands.",
        f"A small bust honours {founder_a} at the valley road.",
    ])
    distractor = doc(inst_b, [
        f"The {inst_b} is an old institution in {city_b}.",
        f"It keeps a modern collection of instruments.",
        f"The {landmark_b} stands a short walk away.",
        f"Guided tours of the {inst_b} run in summer.",
    ])

    if fact_count == 2:
        question = (f"What color is the {landmark_a} in the city "
                    f"where the {inst_a} is located?")
        answer = color_a
        supporting = [[inst_a, 0], [city_a, 1]]
    elif fact_count == 3:
        question = (f"In which year was the institute located in the city "
                    f"of the {color_a} {landmark_a} founded?")
        answer = year_a
        supporting = [[city_a, 1], [inst_a, 0], [founder_a, 1]]
    else:
        question = (f"What color is the landmark in the home city of the "
                    f"famous surveyor who founded the {inst_a} in {year_a}?")
        answer = color_a
        supporting = [[founder_a, 1], [founder_a, 0], [inst_a, 0], [city_a, 1]]

    return {
        "_id": f"toy-bridge-{fact_count}-{idx}",
        "question": question,
        "answer": answer,
        "type": "bridge",
        "level": "medium",
        "supporting_facts": supporting,
        "context": [inst_doc, city_doc, founder_doc, distractor],
    }


def comparison_sample(idx, fact_count, world_a, world_b):
    city_a, landmark_a, color_a, inst_a, founder_a, year_a = world_a
    city_b, landmark_b, color_b, inst_b, founder_b, year_b = world_b

    a_doc = doc(landmark_a, [
        f"The {landmark_a} is a large landmark in {city_a}.",
        f"The {landmark_a} was completed in {year_a}.",
        f"Paths around the site are lit after dusk.",
        f"Postcards of the {landmark_a} sell at the gate.",
    ])
    b_doc = doc(landmark_b, [
        f"The {landmark_b} is an old landmark in {city_b}.",
        f"The {landmark_b} was completed in {year_b}.",
        f"A bright lantern marks its northern stair.",
        f"Sketches of the {landmark_b} hang in the town hall.",
    ])
    c_doc = doc(city_a, [
        f"{city_a} is a quiet river town.",
        f"Its granaries date to the famous trading era.",
        f"The {inst_a} keeps the town records.",
        f"Winters in {city_a} are long and calm.",
    ])
    d_doc = doc(city_b, [
        f"{city_b} is a modern port town.",
        f"Shipwrights there favour bright cedar hulls.",
        f"The {inst_b} faces the harbour square.",
        f"Festivals fill {city_b} each spring.",
    ])

    if fact_count == 2:
        question = (f"Are the {landmark_a} and the {landmark_b} "
                    f"both located in {city_a}?")
        answer = "no"
        supporting = [[landmark_a, 0], [landmark_b, 0]]
    elif fact_count == 3:
        question = (f"Which was completed first, the {landmark_a} "
                    f"or the {landmark_b}?")
        answer = landmark_a if year_a < year_b else landmark_b
        supporting = [[landmark_a, 1], [landmark_b, 1], [landmark_b, 0]]
    else:
        question = (f"Is the landmark of {city_a} older than the "
                    f"landmark of {city_b}?")
        answer = "yes" if year_a < year_b else "no"
        supporting = [[landmark_a, 0], [landmark_a, 1], [landmark_b, 0], [landmark_b, 1]]

    return {
        "_id": f"toy-comparison-{fact_count}-{idx}",
        "question": question,
        "answer": answer,
        "type": "comparison",
        "level": "medium",
        "supporting_facts": supporting,
        "context": [a_doc, b_doc, c_doc, d_doc],
    }


def main():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    records = []
    for idx in range(4):
        for fc in (2, 3, 4):
            wa = WORLDS[(idx * 3 + fc) % len(WORLDS)]
            wb = WORLDS[(idx * 3 + fc + 5) % len(WORLDS)]
            records.append(bridge_sample(idx, fc, wa, wb))
            records.append(comparison_sample(idx, fc, wb, wa))

    out = os.path.join(root, "data", "toy_hotpot.json")
    with open(out, "w") as f:
        json.dump(records, f, indent=2)
        f.write("\n")
    print(f"wrote {len(records)} records -> {out}")

    lexicon = {
        "synonyms": {
            "large": ["vast", "immense"],
            "old": ["ancient", "aged"],
            "famous": ["renowned", "celebrated"],
            "bright": ["vivid", "luminous"],
            "quiet": ["calm", "hushed"],
            "modern": ["contemporary", "recent"],
            "small": ["tiny", "compact"],
            "long": ["lengthy", "extended"],
            "wide": ["broad", "expansive"],
        },
        "antonyms": {
            "large": ["small"],
            "old": ["new"],
            "famous": ["obscure"],
            "bright": ["dim"],
            "quiet": ["noisy"],
            "modern": ["archaic"],
            "long": ["short"],
            "wide": ["narrow"],
            "first": ["last"],
        },
        "noise": ["zorvik", "flembrast", "quaxole", "drindle", "snorvane",
                   "plimbork", "vexumel", "craddlefen"],
    }
    lex_out = os.path.join(root, "data", "lexicon.json")
    with open(lex_out, "w") as f:
        json.dump(lexicon, f, indent=2)
        f.write("\n")
    print(f"wrote lexicon -> {lex_out}")


if __name__ == "__main__":
    main()
