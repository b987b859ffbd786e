import pytest

from coursekg import (
    EdgeType,
    EntityKind,
    Gazetteer,
    GazetteerEntry,
    HeadingRules,
    SourceKind,
    build_course_graph,
    compute_term_stats,
    extract_knowledge_points,
    load_gazetteer,
    parse_course_document,
)
from coursekg.errors import ChainViolation, GazetteerError
from coursekg.extraction import TermOccurrence


def gaz(*terms, aliases=None):
    entries = {}
    for term in terms:
        entries[term] = GazetteerEntry(term, tuple((aliases or {}).get(term, ())))
    return Gazetteer(entries)


def doc(body_by_heading, source=SourceKind.SYLLABUS, name="CP"):
    lines = [f"---\nname: {name}\n---"]
    for title, body in body_by_heading.items():
        lines.append(f"# {title}")
        if body:
            lines.append(body)
    text = "\n".join(lines) + "\n"
    return parse_course_document(text, HeadingRules.default(source), path="doc.txt")


class TestGazetteer:
    def test_load_file(self, tmp_path):
        path = tmp_path / "gaz.tsv"
        path.write_text(
            "# comment\n"
            "matched filter\tmatching filter;MF\tA filter.\t匹配\tbaidu text\n"
            "spectrum\n",
            encoding="utf-8",
        )
        loaded = load_gazetteer(path)
        assert len(loaded) == 2
        entry = loaded.entries["matched filter"]
        assert entry.aliases == ("matching filter", "MF")
        assert entry.description_wikiE == "A filter."
        assert entry.description_baidu == "baidu text"
        assert loaded.entries["spectrum"].descriptions() == {}

    def test_duplicate_after_normalization_rejected(self):
        with pytest.raises(GazetteerError):
            Gazetteer(
                {
                    "Matched Filter": GazetteerEntry("Matched Filter"),
                    "matched filter": GazetteerEntry("matched filter"),
                }
            )

    def test_alias_maps_to_canonical(self):
        g = gaz("matched filter", aliases={"matched filter": ("matching filter",)})
        tree = doc({"H": "uses a matching filter today"})
        occ = extract_knowledge_points(tree, g)
        assert [o.term for o in occ] == ["matched filter"]


def brute_force_occurrences(tree, gazetteer):
    """Oracle: enumerate every substring match, then apply the tie rules."""
    forms = gazetteer.surface_forms()
    out = []
    for heading in tree.walk():
        folded, offsets = None, None
        from coursekg.textnorm import fold_with_offsets

        folded, offsets = fold_with_offsets(heading.body)
        candidates = []
        for surface, canonical in forms.items():
            if not surface:
                continue
            for i in range(len(folded) - len(surface) + 1):
                if folded[i : i + len(surface)] == surface:
                    candidates.append((offsets[i], len(surface), canonical))
        chosen = []
        last_end = -1
        for start, length, term in sorted(candidates, key=lambda t: (t[0], -t[1], t[2])):
            if start >= last_end:
                chosen.append((start, term))
                last_end = start + length
        out.extend(
            TermOccurrence(term, heading.hid, heading.body_start + start)
            for start, term in chosen
        )
    out.sort(key=lambda o: o.offset)
    return out


class TestExtraction:
    def test_single_phrase_match(self):
        tree = doc({"H": "the matched filter maximizes SNR"})
        occ = extract_knowledge_points(tree, gaz("matched filter"))
        assert len(occ) == 1
        assert occ[0].term == "matched filter"
        heading = next(tree.walk())
        assert occ[0].offset == heading.body_start + heading.body.index("matched filter")

    def test_empty_body(self):
        tree = doc({"H": ""})
        assert extract_knowledge_points(tree, gaz("anything")) == []

    def test_longest_match_wins_against_bruteforce(self):
        tree = doc(
            {
                "H": "signal processing of a signal needs signal processing twice",
                "I": "the signal itself",
            }
        )
        g = gaz("signal", "signal processing")
        got = extract_knowledge_points(tree, g)
        assert got == brute_force_occurrences(tree, g)
        first = got[0]
        assert first.term == "signal processing"

    def test_bruteforce_oracle_on_messy_fixture(self):
        tree = doc(
            {
                "A": "Ｍatched　Filter and matched filters overlap; spectrum too",
                "B": "band-pass signal, analytic signal, signal",
                "C": "nothing relevant",
            }
        )
        g = gaz("matched filter", "spectrum", "signal", "band-pass signal", "analytic signal")
        assert extract_knowledge_points(tree, g) == brute_force_occurrences(tree, g)

    def test_matching_is_case_and_width_insensitive(self):
        tree = doc({"H": "ＳＰＥＣＴＲＵＭ analysis"})
        occ = extract_knowledge_points(tree, gaz("spectrum"))
        assert [o.term for o in occ] == ["spectrum"]

    def test_regex_rules_add_terms(self):
        tree = doc({"H": "protocols RFC-793 and RFC-1149 apply"})
        occ = extract_knowledge_points(tree, Gazetteer({}), rules=[r"rfc-\d+"])
        assert [o.term for o in occ] == ["rfc-793", "rfc-1149"]

    def test_needs_gazetteer_or_rules(self):
        tree = doc({"H": "text"})
        with pytest.raises(GazetteerError):
            extract_knowledge_points(tree, Gazetteer({}))

    def test_occurrences_are_offset_sorted_and_in_span(self):
        tree = doc({"A": "spectrum then spectrum", "B": "spectrum again"})
        occ = extract_knowledge_points(tree, gaz("spectrum"))
        offsets = [o.offset for o in occ]
        assert offsets == sorted(offsets)
        spans = {h.hid: (h.body_start, h.body_start + len(h.body)) for h in tree.walk()}
        for o in occ:
            lo, hi = spans[o.heading]
            assert lo <= o.offset < hi


class TestTermStats:
    def test_count_and_min_offset(self):
        occs = [
            TermOccurrence("a", "1", 40),
            TermOccurrence("a", "1", 10),
            TermOccurrence("a", "2", 99),
        ]
        assert compute_term_stats(occs) == {"a": {"word_frequency": 3, "start": 10}}

    def test_absent_terms_are_absent(self):
        assert compute_term_stats([]) == {}

    def test_linear_scan_oracle(self):
        tree = doc({"A": "x y x", "B": "y x y y"})
        g = gaz("x", "y")
        occ = extract_knowledge_points(tree, g)
        stats = compute_term_stats(occ)
        # independent recount: linear scan over the raw (ascii) bodies
        expected: dict[str, dict[str, int]] = {}
        for heading in tree.walk():
            for i, ch in enumerate(heading.body):
                if ch in ("x", "y"):
                    entry = expected.setdefault(
                        ch, {"word_frequency": 0, "start": heading.body_start + i}
                    )
                    entry["word_frequency"] += 1
                    entry["start"] = min(entry["start"], heading.body_start + i)
        assert stats == expected


class TestBuildGraph:
    def test_syllabus_counts(self):
        tree = doc({"Teaching Content": "A and B live here"})
        occ = extract_knowledge_points(tree, gaz("A", "B"))
        g = build_course_graph(tree, occ)
        kinds = [n.kind for n in g.node_list()]
        assert kinds.count(EntityKind.COURSE) == 1
        assert kinds.count(EntityKind.TEACHING_CONTENT) == 1
        assert kinds.count(EntityKind.KNOWLEDGE_POINT) == 2
        assert g.edge_count() == 3
        assert all(e.type is EdgeType.HAS_PART_OF for e in g.edges())

    def test_without_occurrences_only_structure(self):
        tree = doc({"T1": "text", "T2": "more"})
        g = build_course_graph(tree, [])
        assert {n.kind for n in g.node_list()} == {
            EntityKind.COURSE,
            EntityKind.TEACHING_CONTENT,
        }

    def test_textbook_fixture_matches_hand_built_graph(self):
        text = (
            "---\nname: CP\n---\n"
            "# U\n"
            "## C\n"
            "### B\n"
            "alpha beta alpha\n"
        )
        tree = parse_course_document(
            text, HeadingRules.default(SourceKind.TEXTBOOK), path="doc.txt"
        )
        occ = extract_knowledge_points(tree, gaz("alpha", "beta"))
        g = build_course_graph(tree, occ)
        # hand-built expectation
        by_name = {(n.kind, n.name) for n in g.node_list()}
        assert by_name == {
            (EntityKind.COURSE, "CP"),
            (EntityKind.KNOWLEDGE_UNIT, "U"),
            (EntityKind.KNOWLEDGE_CHAPTER, "C"),
            (EntityKind.KNOWLEDGE_BLOCK, "B"),
            (EntityKind.KNOWLEDGE_POINT, "alpha"),
            (EntityKind.KNOWLEDGE_POINT, "beta"),
        }
        alpha = next(n for n in g.node_list() if n.name == "alpha")
        beta = next(n for n in g.node_list() if n.name == "beta")
        assert alpha.attrs["word_frequency"] == 2
        assert beta.attrs["word_frequency"] == 1
        assert alpha.attrs["ranker"] == 1 and beta.attrs["ranker"] == 2
        assert alpha.attrs["level"] == 4
        body = tree.roots[0].children[0].children[0]
        assert alpha.attrs["start"] == body.body_start
        edges = {(g.nodes[e.src].name, g.nodes[e.dst].name) for e in g.edges()}
        assert edges == {("CP", "U"), ("U", "C"), ("C", "B"), ("B", "alpha"), ("B", "beta")}

    def test_term_under_two_headings_gives_two_nodes(self):
        tree = doc({"T1": "gamma here", "T2": "gamma there"})
        occ = extract_knowledge_points(tree, gaz("gamma"))
        g = build_course_graph(tree, occ)
        points = g.nodes_of_kind(EntityKind.KNOWLEDGE_POINT)
        assert len(points) == 2
        assert {p.name for p in points} == {"gamma"}

    def test_node_count_identity(self):
        tree = doc({"T1": "a b a", "T2": "b c", "T3": ""})
        occ = extract_knowledge_points(tree, gaz("a", "b", "c"))
        g = build_course_graph(tree, occ)
        distinct_pairs = {(o.term, o.heading) for o in occ}
        headings = sum(1 for _ in tree.walk())
        assert len(g.nodes) == 1 + headings + len(distinct_pairs)

    def test_chain_violation_for_deep_syllabus(self):
        rules = HeadingRules.from_pairs(
            SourceKind.SYLLABUS,
            [(r"^##\s+(?P<title>.+)$", 2), (r"^#\s+(?P<title>.+)$", 1)],
        )
        tree = parse_course_document(
            "---\nname: X\n---\n# A\n## B\n", rules, path="doc.txt"
        )
        with pytest.raises(ChainViolation):
            build_course_graph(tree, [])

    def test_descriptions_from_gazetteer(self):
        g = Gazetteer(
            {"spectrum": GazetteerEntry("spectrum", (), "freq view", None, "频谱")}
        )
        tree = doc({"T": "spectrum"})
        graph = build_course_graph(tree, extract_knowledge_points(tree, g), g)
        point = graph.nodes_of_kind(EntityKind.KNOWLEDGE_POINT)[0]
        assert point.attrs["description_wikiE"] == "freq view"
        assert point.attrs["description_baidu"] == "频谱"
        assert "description_wikiC" not in point.attrs

    def test_rebuild_is_byte_identical(self):
        from coursekg import emit_graph_json

        tree = doc({"T1": "a b", "T2": "b"})
        g1 = build_course_graph(tree, extract_knowledge_points(tree, gaz("a", "b")))
        g2 = build_course_graph(tree, extract_knowledge_points(tree, gaz("a", "b")))
        assert emit_graph_json(g1) == emit_graph_json(g2)

    def test_point_frequencies_positive(self):
        tree = doc({"T1": "a b a", "T2": "b"})
        g = build_course_graph(tree, extract_knowledge_points(tree, gaz("a", "b")))
        for p in g.nodes_of_kind(EntityKind.KNOWLEDGE_POINT):
            assert p.attrs["word_frequency"] >= 1
            assert p.attrs["start"] >= 0
