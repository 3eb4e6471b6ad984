#!/usr/bin/env python3
"""Regenerate the bundled data fixtures under crates/core/data/.

Inputs: a CMUdict file (cmudict 1.1.3, `pip download cmudict`).
Outputs: three source lexica, the held-out G2P word list and the prompt set.

    python3 tools/make_fixtures.py path/to/cmudict.dict crates/core/data
"""
import random
import sys
from pathlib import Path

FUNCTION_WORDS = """a about above across after against all along also although am among an and any
anyone are around as at be because been before behind being below beside between both but by can
could did do does down during each either every for from had has have he her here hers him his how
i if in into is it its just may me might mine must my near neither no nor not of off on once one only
onto or our out over own shall she should since so some such than that the their them then there
these they this those though through to too toward under until unless up upon us very was we were
what when where which while whilst who whom whose why will with within without would yet you your""".split()

NOUNS = """cat hat map bag dog bed cup cap box fox book road bread cake ship city water butter letter
matter bottle body lady ladder leader metal pedal corner dinner winner honey money penny banner manner
apple table people poodles noodles candles children hundred apron barrel arrow sparrow parent area fairy
garden button dozen lemon whale wheel wheat whip moon food soup group room shoe school dune tune noon
girls pearls hills miles wheels balls dolls curls walls story board horse door floor morning north
sport night light gate boat coat note field world child hand ground sound pin pen net pet pig fig bus
sun nut lamp camp desk mask milk gift nest flag frog king ring song fish dish cash sheep tree street
train rain stone bone rope kite bike tank duty beauty total level travel animal""".split()

ADJECTIVES = """dirty pretty little muddy funny sunny tiny red big bad good old cold hot white bright great
late soft fast last first best next round deep short true blue new ready simple able final early
scary hairy narrow wet flat black thick thin quick sick rich sad glad mad small open even abrupt
straight seven eight two four forty thirty sweet green""".split()

VERBS_PAST = """fed sat kept left told held found slept took met hit cut put set got lost sent spent
dropped stopped jumped helped asked packed kicked lifted planted rested landed""".split()

VERBS_BASE = """find keep start stop follow carry marry vary need want see hear hold send build ask help
tell feel call look eat wait whisper meet get let sit run win dig jump fill lift pick pull push drink""".split()

EXTRA = """fed straight abrupt start follow winding whilst dirty corner curls barrel children's poodles
dune tank marry mary merry caught cot which witch always often after under over every only forty
eating meeting sitting getting cutting putting setting voted needed waited heated seated hurting
writer rider beauty pity daddy lady bitter better matter forty thirty tiny minor finer owner many
funny sunny penny winner manner banner""".split()

# Homographs tagged in source C (orthography, tag, pronunciation).
TAGGED = [
    ("live", "V", "l ih1 v"), ("live", "ADJ", "l ay1 v"),
    ("lead", "N-metal", "l eh1 d"), ("lead", "V", "l iy1 d"),
    ("read", "PRES", "r iy1 d"), ("read", "PAST", "r eh1 d"),
    ("wind", "N", "w ih1 n d"), ("wind", "V", "w ay1 n d"),
    ("close", "ADJ", "k l ow1 s"), ("close", "V", "k l ow1 z"),
    ("tear", "N-eye", "t ih1 r"), ("tear", "V", "t eh1 r"),
    ("wound", "N", "w uw1 n d"), ("wound", "V", "w aw1 n d"),
    ("bass", "N-fish", "b ae1 s"), ("bass", "N-music", "b ey1 s"),
    ("bow", "N-weapon", "b ow1"), ("bow", "V", "b aw1"),
    ("use", "N", "y uw1 s"), ("use", "V", "y uw1 z"),
    ("record", "N", "r eh1 k er0 d"), ("record", "V", "r ih0 k ao1 r d"),
    ("present", "N", "p r eh1 z ah0 n t"), ("present", "V", "p r iy0 z eh1 n t"),
]

# Distinction-preserving forms (no marry/merry/Mary merger, /o/ before /r/).
DISTINCT = {
    "marry": "m ae1 r iy0", "mary": "m ey1 r iy0", "merry": "m eh1 r iy0",
    "barrel": "b ae1 r ah0 l", "carry": "k ae1 r iy0", "narrow": "n ae1 r ow0",
    "arrow": "ae1 r ow0", "sparrow": "s p ae1 r ow0", "vary": "v ey1 r iy0",
    "fairy": "f ey1 r iy0", "hairy": "hh ey1 r iy0", "scary": "s k ey1 r iy0",
    "area": "ey1 r iy0 ah0", "parent": "p ey1 r ah0 n t",
    "corner": "k ow1 r n er0", "more": "m ow1 r", "four": "f ow1 r",
    "story": "s t ow1 r iy0", "board": "b ow1 r d", "door": "d ow1 r",
    "floor": "f l ow1 r", "sport": "s p ow1 r t", "forty": "f ow1 r t iy0",
}

HELD_OUT = """mat rat pat fan tan van tap lap rag tag wed hen jet bet wig kit tin bin fin hip dip rip
zip rot hop cop mug rug jug tug bun gun pup hut mist silk band dump pump spin grin slip clap
bud sum lad pad nap dim rim""".split()

# Regular monosyllables kept in the training lexicon.
REGULAR = """bat man can pan ran sat fat cap map tap bag red fed led pen ten men net pet get set let
big dig pig fig bit fit hit pit sit pin win lip tip dog log hot pot not dot lot top mop pop bug hug
rug cub fun run sun cup cut nut but bus stop spot step drop trip flag frog plan swim hand land sand
lamp camp jump bump best nest rest test west desk mask milk list lift gift soft left kept glad skip
slim trim snap grab crab drum plum bled fled sled shed shop chop chip chin shin then them this that
than with wish fish dish rich much such lunch bench bunch punch""".split()


def load_cmu(path):
    d = {}
    for line in open(path, encoding="utf-8"):
        line = line.split("#")[0].strip()
        if not line:
            continue
        w, *p = line.split()
        d.setdefault(w.split("(")[0], []).append(" ".join(p).lower())
    return d


def norm(pron):
    toks = pron.split()
    out = []
    i = 0
    while i < len(toks):
        if toks[i] == "hh" and i + 1 < len(toks) and toks[i + 1] == "w":
            out.append("hw")
            i += 2
            continue
        out.append(toks[i])
        i += 1
    return " ".join(out)


def main():
    cmu = load_cmu(sys.argv[1])
    out = Path(sys.argv[2])
    vocab = []
    for w in FUNCTION_WORDS + NOUNS + ADJECTIVES + VERBS_PAST + VERBS_BASE + EXTRA + REGULAR:
        if w not in vocab and w not in HELD_OUT:
            vocab.append(w)
    tagged_orth = {o for o, _, _ in TAGGED}
    missing = [w for w in vocab if w not in cmu]
    assert not missing, missing
    for w in HELD_OUT:
        assert w in cmu and w not in vocab, w

    src_a, src_b, src_c = [], [], []
    for w in sorted(vocab):
        prons = [norm(p) for p in cmu[w]]
        src_a.append((w, "", prons[0]))
        for p in prons[1:]:
            src_b.append((w, "", p))
        if w in DISTINCT:
            src_c.append((w, "", DISTINCT[w]))
    for o, t, p in TAGGED:
        for q in cmu.get(o, []):
            src_a.append((o, "", norm(q)))
        src_c.append((o, t, p))
    # the wh-words lacking an /hw/ variant in CMUdict get one in source B
    for w in sorted(vocab):
        if w.startswith("wh") and not any(p.startswith("hw") for _, _, p in src_b + src_a if _ == w):
            first = norm(cmu[w][0])
            if first.startswith("w "):
                src_b.append((w, "", "hw " + first[2:]))
    # orthographies covered only by tagged homographs
    all_orth = {o for o, _, _ in src_a + src_b + src_c}

    def write(name, rows, header):
        rows = sorted(set(rows))
        with open(out / name, "w", encoding="utf-8") as f:
            f.write(f"# {header}\n")
            for o, t, p in rows:
                f.write(f"{o}\t{t}\t{p}\n")

    write("lexicon_a.tsv", src_a, "source A: first-listed pronunciations, untagged")
    write("lexicon_b.tsv", src_b, "source B: variant pronunciations")
    write("lexicon_c.tsv", src_c, "source C: tagged homographs and distinction-preserving forms")

    with open(out / "g2p_heldout.tsv", "w", encoding="utf-8") as f:
        f.write("# held-out regular words: orth<TAB><TAB>pronunciation\n")
        for w in HELD_OUT:
            f.write(f"{w}\t\t{cmu[w][0]}\n")

    with open(out / "function_words.txt", "w", encoding="utf-8") as f:
        f.write("# closed-class words; one per line\n")
        for w in FUNCTION_WORDS:
            f.write(w + "\n")

    make_prompts(out / "prompts.txt", vocab)
    print("orthographies:", len(all_orth), "vocab:", len(vocab))


PROBE_SENTENCES = {"fed", "and", "straight", "and follow", "abrupt start", "the tank",
                   "the winding", "dirty", "corner", "in her", "curls", "barrel",
                   "children's", "poodles", "whilst", "dune"}


def make_prompts(path, vocab):
    rng = random.Random(1997)
    nouns = [w for w in NOUNS if w in vocab]
    adjs = [w for w in ADJECTIVES if w in vocab]
    past = [w for w in VERBS_PAST if w in vocab]
    base = [w for w in VERBS_BASE if w in vocab]
    homo = [f"{o}/{t}" for o, t, _ in TAGGED if t.startswith("N")]
    dets = ["the", "the", "the", "a", "her", "his", "my", "our", "this", "that", "every"]
    preps = ["in", "on", "at", "by", "with", "under", "over", "near", "behind", "into", "from", "after"]
    prons = ["he", "she", "we", "they", "i", "you"]
    conj = ["and", "but", "so", "or", "whilst", "while", "because"]
    wh = ["where", "when", "why", "how", "which", "what"]

    def np_():
        d = rng.choice(dets)
        parts = [d]
        if rng.random() < 0.55:
            parts.append(rng.choice(adjs))
        parts.append(rng.choice(nouns + homo) if rng.random() < 0.95 else rng.choice(homo))
        return parts

    def clause():
        subj = rng.choice([[rng.choice(prons)], np_()])
        v = [rng.choice(past)]
        obj = np_()
        tail = [rng.choice(preps)] + np_() if rng.random() < 0.5 else []
        return subj + v + obj + tail

    sentences = []
    while len(sentences) < 700:
        kind = rng.random()
        if kind < 0.40:
            s = " ".join(clause()) + "."
        elif kind < 0.55:
            a, b = clause(), clause()
            s = " ".join(a) + ", " + rng.choice(conj) + " " + " ".join(b) + "."
        elif kind < 0.70:
            q = rng.choice(wh)
            s = q + " did " + rng.choice(prons) + " " + rng.choice(base) + " " + " ".join(np_()) + "?"
        elif kind < 0.80:
            s = "did " + " ".join(np_()) + " " + rng.choice(base) + " " + " ".join(np_()) + "?"
        elif kind < 0.92:
            items = [rng.choice(nouns) for _ in range(rng.randint(3, 4))]
            s = ", ".join(items[:-1]) + ", and " + items[-1] + "."
        else:
            w = rng.choice(nouns + adjs + past)
            s = w + "."
        if s.rstrip(".?") in PROBE_SENTENCES:
            continue
        sentences.append(s)
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(s + "\n")
    n = sum(len(s.replace(",", " ").split()) for s in sentences)
    print("prompt words:", n)


if __name__ == "__main__":
    main()
