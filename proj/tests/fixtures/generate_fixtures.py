#!/usr/bin/env python3
"""Writes the small fixture corpus used by the tests and the example config.

Run with no arguments to regenerate the graph dump, training set,
definitions, pattern table and bilinear model. Run with
`--scores <candidates.tsv>` to regenerate the external score files for the
candidates the pipeline extracts from this corpus.
"""

import argparse
import hashlib
import json
import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

RELATIONS = [
    "AtLocation", "CapableOf", "Causes", "CreatedBy", "Desires", "HasProperty",
    "HasSubevent", "IsA", "MadeOf", "PartOf", "ReceivesAction", "UsedFor",
]

CN4 = '{"dataset": "/d/conceptnet/4/en", "license": "cc:by/4.0", "weight": 1.0}'
WIKT = '{"dataset": "/d/wiktionary/en", "license": "cc:by-sa/4.0", "weight": 1.0}'

# (relation, head, tail)
GRAPH = [
    ("IsA", "bartender", "person"),
    ("AtLocation", "bartender", "bar"),
    ("CapableOf", "bartender", "mix drinks"),
    ("IsA", "waiter", "person"),
    ("AtLocation", "waiter", "restaurant"),
    ("CapableOf", "waiter", "serve food"),
    ("IsA", "knife", "tool"),
    ("UsedFor", "knife", "cutting"),
    ("AtLocation", "knife", "kitchen"),
    ("IsA", "teapot", "container"),
    ("UsedFor", "teapot", "making tea"),
    ("AtLocation", "teapot", "kitchen"),
    ("MadeOf", "candle", "wax"),
    ("UsedFor", "candle", "light"),
    ("IsA", "owl", "bird"),
    ("CapableOf", "owl", "hunt mice"),
    ("HasProperty", "owl", "nocturnal"),
    ("AtLocation", "camper", "tent"),
    ("IsA", "camper", "person"),
    ("MadeOf", "pickle", "cucumber"),
    ("HasProperty", "pickle", "sour"),
    ("IsA", "hammer", "tool"),
    ("UsedFor", "hammer", "driving nails"),
    ("AtLocation", "bakery", "town"),
    ("CreatedBy", "bread", "baker"),
    ("IsA", "kitten", "young cat"),
    ("Desires", "kitten", "milk"),
    ("IsA", "violin", "string instrument"),
    ("MadeOf", "violin", "wood"),
    ("UsedFor", "ladder", "climbing"),
    ("PartOf", "rung", "ladder"),
    ("IsA", "glacier", "mass of ice"),
    ("AtLocation", "glacier", "mountain"),
    ("IsA", "nurse", "person"),
    ("AtLocation", "nurse", "hospital"),
    ("CapableOf", "nurse", "care for patients"),
    ("IsA", "pilot", "person"),
    ("CapableOf", "pilot", "fly an airplane"),
    ("UsedFor", "soap", "washing"),
    ("UsedFor", "umbrella", "protection"),
    ("HasProperty", "ice", "cold"),
    ("Causes", "rain", "wet ground"),
    ("Causes", "fire", "smoke"),
    ("HasSubevent", "eating", "chewing"),
    ("HasSubevent", "cooking", "heating food"),
    ("ReceivesAction", "bread", "baked"),
    ("ReceivesAction", "tea", "brewed"),
    ("PartOf", "blade", "knife"),
    ("PartOf", "wick", "candle"),
    ("Desires", "cat", "warm place"),
    ("CreatedBy", "honey", "bees"),
    ("HasProperty", "glacier", "large"),
    ("IsA", "cat", "animal"),
    ("IsA", "bird", "animal"),
    ("IsA", "bread", "food"),
    ("IsA", "soap", "substance"),
    ("IsA", "umbrella", "canopy"),
    ("IsA", "ladder", "frame"),
    ("IsA", "bakery", "shop"),
    ("IsA", "pickle", "food"),
]

# Rows that the ingest filters must drop.
NOISE = [
    ("/a/[/r/IsA/,/c/fr/chat/,/c/fr/animal/]", "/r/IsA", "/c/fr/chat", "/c/fr/animal", CN4),
    ("/a/[/r/Synonym/,/c/en/cat/,/c/en/feline/]", "/r/Synonym", "/c/en/cat", "/c/en/feline", CN4),
    ("/a/[/r/IsA/,/c/en/teacup/,/c/en/cup/]", "/r/IsA", "/c/en/teacup", "/c/en/cup", WIKT),
    ("/a/[/r/IsA/,/c/en/owl/n,/c/de/vogel/]", "/r/IsA", "/c/en/owl/n", "/c/de/vogel", CN4),
]

TRAINING = [
    ("IsA", "bartender", "person", 1.0),
    ("AtLocation", "waiter", "restaurant", 1.0),
    ("UsedFor", "knife", "cutting", 1.0),
    ("UsedFor", "teapot", "making tea", 1.0),
    ("MadeOf", "candle", "wax", 1.0),
    ("CapableOf", "owl", "hunt mice", 1.0),
    ("IsA", "hammer", "tool", 1.0),
    ("IsA", "kitten", "young cat", 1.0),
    ("MadeOf", "violin", "wood", 1.0),
    ("UsedFor", "ladder", "climbing", 1.0),
    ("AtLocation", "nurse", "hospital", 1.0),
    ("CapableOf", "pilot", "fly an airplane", 1.0),
    ("UsedFor", "soap", "washing", 1.0),
    ("Causes", "fire", "smoke", 1.0),
    ("HasProperty", "ice", "cold", 1.0),
    ("PartOf", "blade", "knife", 1.0),
    ("Desires", "cat", "warm place", 1.0),
    ("HasSubevent", "eating", "chewing", 1.0),
    ("ReceivesAction", "bread", "baked", 1.0),
    ("CreatedBy", "honey", "bees", 1.0),
    ("IsA", "camper", "person", 1.0),
    ("AtLocation", "camper", "tent", 1.0),
]

DEFINITIONS = [
    ("bartender", "noun", "One who tends a bar or pub; a person preparing and serving drinks at a bar."),
    ("waiter", "noun", "A person who serves food and drinks at tables in a restaurant."),
    ("knife", "noun", "A tool with a sharp blade, used for cutting food or other material."),
    ("teapot", "noun", "A vessel with a spout and a lid, used for brewing and serving tea."),
    ("candle", "noun", "A cylinder of wax with a wick, burned to give light."),
    ("owl", "noun", "A nocturnal bird of prey with large eyes and a flat face."),
    ("camper", "noun", "A person who sleeps in a tent while camping."),
    ("pickle", "noun", "A cucumber preserved in salt water or vinegar."),
    ("hammer", "noun", "A tool with a heavy head, used for driving nails."),
    ("bakery", "noun", "A shop where bread and cakes are baked and sold."),
    ("kitten", "noun", "A young cat."),
    ("kitten", "noun", "plural of kitten"),
    ("violin", "noun", "A wooden string instrument played with a bow."),
    ("ladder", "noun", "A portable frame with rungs, used for climbing and reaching high places."),
    ("glacier", "noun", "A large mass of ice moving slowly over land."),
    ("nurse", "noun", "A person trained to care for sick people, especially in a hospital."),
    ("nurse", "verb", "To care for the sick or injured."),
    ("pilot", "noun", "A person who flies an aircraft."),
    ("soap", "noun", "A substance used with water for washing and cleaning."),
    ("umbrella", "noun", "A folding canopy used for protection against rain."),
    ("teapot", "noun", "Alternative form of tea pot"),
    ("violin", "noun", "Misspelling of viola"),
    ("knife", "noun", "A tool with a sharp blade, used for cutting food or other material."),
    ("bread", "noun", "A food made from flour, water and yeast, baked in an oven."),
    ("fire", "noun", "The rapid oxidation of fuel, producing heat, light and smoke."),
    ("rain", "noun", "Water falling from clouds in drops."),
    ("rain", "verb", "Alternative spelling of reign"),
    ("cat", "noun", "A small domesticated animal kept as a pet, hunting mice and birds."),
    ("ice", "noun", "Frozen water, a cold and hard substance."),
    ("honey", "noun", "A sweet viscous liquid produced by bees from nectar."),
    ("dragon", "noun", "A legendary creature, typically a large reptile."),
]

# Fixed pattern table for the bartender end-to-end check.
BARTENDER_PATTERNS = [
    ("AtLocation", "NOUN", 1),
    ("CapableOf", "VERB,CCONJ,VERB,NOUN", 1),
    ("IsA", "NOUN", 1),
]


def uri(text, lang="en"):
    return "/c/%s/%s" % (lang, text.replace(" ", "_"))


def write_graph():
    with open(os.path.join(HERE, "conceptnet.csv"), "w") as f:
        for rel, head, tail in GRAPH:
            f.write("/a/[/r/%s/,%s/,%s/]\t/r/%s\t%s\t%s\t%s\n"
                    % (rel, uri(head), uri(tail), rel, uri(head) + "/n", uri(tail), CN4))
        for row in NOISE:
            f.write("\t".join(row) + "\n")
        f.write("this line is malformed\n")


def write_training():
    with open(os.path.join(HERE, "train.tsv"), "w") as f:
        for rel, head, tail, conf in TRAINING:
            f.write("%s\t%s\t%s\t%s\n" % (rel, head, tail, conf))


def write_definitions():
    with open(os.path.join(HERE, "definitions.jsonl"), "w") as f:
        for term, pos, gloss in DEFINITIONS:
            f.write(json.dumps({"term": term, "pos": pos, "gloss": gloss}) + "\n")


def write_patterns():
    with open(os.path.join(HERE, "bartender_patterns.tsv"), "w") as f:
        f.write("# side=tail\n")
        for rel, form, freq in BARTENDER_PATTERNS:
            f.write("%s\t%s\t%d\n" % (rel, form, freq))


def vocabulary():
    words = set()
    for _, head, tail in GRAPH:
        words.update(head.split())
        words.update(tail.split())
    for term, _, gloss in DEFINITIONS:
        words.add(term)
        for w in gloss.replace(",", " ").replace(".", " ").replace(";", " ").split():
            words.add(w.lower())
    return sorted(words)


def write_model():
    rng = random.Random(20240601)
    d, r = 4, 3
    # CreatedBy is left out so the scorer has a relation without a matrix.
    rels = [x for x in RELATIONS if x != "CreatedBy"]
    lines = ["cskm-bilinear 1", "# fixture model: random weights", "dims %d %d" % (d, r),
             "relations %d %s" % (len(rels), " ".join(rels))]
    words = vocabulary()
    lines.append("embeddings %d" % len(words))
    for w in words:
        lines.append(w + " " + " ".join("%.6f" % rng.gauss(0, 1) for _ in range(d)))
    lines.append("transform")
    for _ in range(r):
        lines.append(" ".join("%.6f" % rng.gauss(0, 0.8) for _ in range(d)))
    lines.append("bias")
    lines.append(" ".join("%.6f" % rng.gauss(0, 0.1) for _ in range(r)))
    for rel in rels:
        lines.append("relation " + rel)
        for _ in range(r):
            lines.append(" ".join("%.6f" % rng.gauss(0, 2.0) for _ in range(r)))
    with open(os.path.join(HERE, "bilinear.model"), "w") as f:
        f.write("\n".join(lines) + "\n")


def unit(key, salt):
    h = hashlib.sha256((salt + "|" + key).encode()).digest()
    return int.from_bytes(h[:8], "big") / float(1 << 64)


def write_scores(candidates_path):
    rows = []
    with open(candidates_path) as f:
        for line in f:
            head, rel, tail = line.rstrip("\n").split("\t")
            rows.append((head, rel, tail))
    with open(os.path.join(HERE, "kgbert_scores.tsv"), "w") as f:
        f.write("# head\trelation\ttail\tscore\n")
        for head, rel, tail in rows:
            key = "\t".join((head, rel, tail))
            # Skewed towards 1 like a classifier that is confident on most inputs.
            f.write("%s\t%s\t%s\t%.6f\n" % (head, rel, tail, unit(key, "kgbert") ** 0.3))
        f.write("dragon\tIsA\tcreature\t0.5\n")
    with open(os.path.join(HERE, "pmi_components.tsv"), "w") as f:
        f.write("# head\trelation\ttail\tlogp(t|h,r)\tlogp(t|r)\tlogp(h|t,r)\tlogp(h|r)\n")
        for head, rel, tail in rows:
            key = "\t".join((head, rel, tail))
            comps = [math.log(0.001 + unit(key, "pmi%d" % i)) for i in range(4)]
            f.write("%s\t%s\t%s\t%s\n" % (head, rel, tail, "\t".join("%.6f" % c for c in comps)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scores", help="candidates.tsv to generate external scores for")
    args = ap.parse_args()
    if args.scores:
        write_scores(args.scores)
        return
    write_graph()
    write_training()
    write_definitions()
    write_patterns()
    write_model()


if __name__ == "__main__":
    main()
