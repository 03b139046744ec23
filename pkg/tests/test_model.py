import pytest
from hypothesis import given
from hypothesis import strategies as st

from ragcheck.model import (
    Claim,
    ClaimSource,
    EntailmentLabel,
    JudgmentError,
    JudgmentSet,
    RagInstance,
    RetrievedChunk,
    Scope,
    claim_membership,
    classify_chunks,
    judgment_from_bools,
    make_claims,
    normalize_text,
    validate_instance,
)

T, F = True, False


def js_with_gt_chunks(gvc, rvc=None):
    g = len(gvc)
    rvc = rvc if rvc is not None else []
    return judgment_from_bools([F] * len(rvc), [F] * g, rvc, gvc)


@pytest.mark.parametrize(
    "gvc, expected",
    [
        ([[T, F], [F, F]], (T, F)),
        ([[F, F, F]], (F, F, F)),
        ([[T, T, F], [F, T, F], [F, F, F]], (T, T, F)),
    ],
)
def test_classify_chunks(gvc, expected):
    assert classify_chunks(js_with_gt_chunks(gvc)).relevant == expected


def test_classify_chunks_no_chunks():
    assert classify_chunks(js_with_gt_chunks([[]])).relevant == ()


def test_membership_relevant_scope_ignores_irrelevant_hit():
    js = js_with_gt_chunks([[T, F]], rvc=[[F, T]])
    assert claim_membership(js, ClaimSource.RESPONSE, Scope.RELEVANT_CHUNKS) == (F,)
    assert claim_membership(js, ClaimSource.RESPONSE, Scope.IRRELEVANT_CHUNKS) == (T,)


def test_membership_all_scope_false_row():
    js = js_with_gt_chunks([[T, T]], rvc=[[F, F]])
    assert claim_membership(js, ClaimSource.RESPONSE, Scope.ALL_CHUNKS) == (F,)


def test_membership_irrelevant_scope_hand_check():
    # relevant = [F, F, T]; claim row [T, F, T] is entailed by irrelevant chunk 0
    js = js_with_gt_chunks([[F, F, T]], rvc=[[T, F, T]])
    assert classify_chunks(js).relevant == (F, F, T)
    assert claim_membership(js, ClaimSource.RESPONSE, Scope.IRRELEVANT_CHUNKS) == (T,)


def test_membership_rejects_wrong_classification_length():
    js = js_with_gt_chunks([[T, F]], rvc=[[T, F]])
    from ragcheck.model import ChunkClassification
    with pytest.raises(JudgmentError):
        claim_membership(js, ClaimSource.RESPONSE, Scope.RELEVANT_CHUNKS, ChunkClassification((T,)))


@pytest.mark.parametrize(
    "kwargs, matrix",
    [
        (dict(response_vs_gt=[T, F]), "response_vs_gt"),
        (dict(gt_vs_response=[]), "gt_vs_response"),
        (dict(gt_vs_chunks=[[T, F], [T]]), "gt_vs_chunks"),
        (dict(response_vs_chunks=[[T]]), "response_vs_chunks"),
    ],
)
def test_dimension_errors_name_the_matrix(kwargs, matrix):
    base = dict(response_vs_gt=[T], gt_vs_response=[T, F],
                response_vs_chunks=[[T, F]], gt_vs_chunks=[[T, F], [F, F]])
    base.update(kwargs)
    resp = make_claims(["r0"], ClaimSource.RESPONSE)
    gt = make_claims(["g0", "g1"], ClaimSource.GROUND_TRUTH)
    with pytest.raises(JudgmentError, match=matrix):
        JudgmentSet(resp, gt, **base)


def test_zero_gt_claims_rejected():
    with pytest.raises(JudgmentError, match="no ground-truth claims"):
        JudgmentSet((), (), [], [], [], [])


def test_claim_source_mismatch_rejected():
    bad = (Claim(0, "x", ClaimSource.RESPONSE),)
    with pytest.raises(JudgmentError, match="wrong source"):
        JudgmentSet((), bad, [], [T], [], [[]])


def test_normalization_and_dedup():
    assert normalize_text("  The\tSKY\n is  Blue ") == "the sky is blue"
    # NFC: decomposed e + combining acute equals the precomposed form
    assert normalize_text("Café") == normalize_text("Café")
    claims = make_claims(["A b.", "a   B.", "", "c"], ClaimSource.RESPONSE)
    assert [c.text for c in claims] == ["a b.", "c"]
    assert [c.claim_id for c in claims] == [0, 1]


def test_entailment_label_collapse():
    assert EntailmentLabel.ENTAILMENT.entailed
    assert not EntailmentLabel.NEUTRAL.entailed
    assert not EntailmentLabel.CONTRADICTION.entailed
    assert EntailmentLabel.parse("contradiction") is EntailmentLabel.CONTRADICTION
    assert EntailmentLabel.parse(True) is EntailmentLabel.ENTAILMENT
    with pytest.raises(ValueError):
        EntailmentLabel.parse("maybe")


def make_instance(**kw):
    base = dict(query_id="q1", query="q?", gt_answer="An answer.", response="A response.",
                retrieved=[RetrievedChunk("d", 0, "text"), RetrievedChunk("d", 1, "more")])
    base.update(kw)
    return RagInstance(**base)


def test_validate_clean():
    assert validate_instance(make_instance()) == []


def test_validate_empty_gt():
    assert validate_instance(make_instance(gt_answer="  ")) == ["gt_answer empty"]


def test_validate_duplicate_chunk():
    inst = make_instance(retrieved=[RetrievedChunk("d", 0, "a"), RetrievedChunk("d", 0, "b")])
    problems = validate_instance(inst)
    assert len(problems) == 1
    assert "doc_id='d'" in problems[0] and "chunk_index=0" in problems[0]


def test_validate_allows_empty_response():
    assert validate_instance(make_instance(response="")) == []


def test_retrieved_order_preserved():
    chunks = [RetrievedChunk("z", 3, "a"), RetrievedChunk("a", 0, "b")]
    assert [c.doc_id for c in make_instance(retrieved=chunks).retrieved] == ["z", "a"]


@st.composite
def judgment_sets(draw, max_m=6, max_g=6, max_k=6):
    m = draw(st.integers(0, max_m))
    g = draw(st.integers(1, max_g))
    k = draw(st.integers(0, max_k))
    b = st.booleans()
    return judgment_from_bools(
        draw(st.lists(b, min_size=m, max_size=m)),
        draw(st.lists(b, min_size=g, max_size=g)),
        draw(st.lists(st.lists(b, min_size=k, max_size=k), min_size=m, max_size=m)),
        draw(st.lists(st.lists(b, min_size=k, max_size=k), min_size=g, max_size=g)),
    )


@given(judgment_sets())
def test_classification_properties(js):
    c1 = classify_chunks(js)
    assert c1 == classify_chunks(js)
    assert len(c1.relevant) == js.k
    # relevant and irrelevant partition the chunks
    assert all(r != i for r, i in zip(c1.relevant, c1.irrelevant))
    # depends only on gt_vs_chunks
    flipped = JudgmentSet(js.response_claims, js.gt_claims,
                          [not v for v in js.response_vs_gt], [not v for v in js.gt_vs_response],
                          [[not v for v in row] for row in js.response_vs_chunks], js.gt_vs_chunks)
    assert classify_chunks(flipped) == c1


@given(judgment_sets(), st.sampled_from(list(ClaimSource)))
def test_membership_all_is_union_of_scopes(js, side):
    all_ = claim_membership(js, side, Scope.ALL_CHUNKS)
    rel = claim_membership(js, side, Scope.RELEVANT_CHUNKS)
    irr = claim_membership(js, side, Scope.IRRELEVANT_CHUNKS)
    assert all_ == tuple(a or b for a, b in zip(rel, irr))
