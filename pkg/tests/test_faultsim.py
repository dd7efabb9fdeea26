import itertools
from collections import Counter

import numpy as np
import pytest

from conftest import NOT_TEXT, XOR_TEXT
from scpdp.dualrail import Outcome
from scpdp.faultsim import (
    CampaignConfig,
    FaultPattern,
    Stratum,
    VectorSplitMix64,
    _vector_sites,
    draw_trial,
    exhaustive_single_fault,
    fault_coverage,
    run_campaign,
    run_trial,
    sample_pattern,
    sample_sites,
    trial_rng,
)
from scpdp.netlist import expand_dual_rail, parse_netlist
from scpdp.report import summary_csv


def test_splitmix_reference_vector():
    assert trial_rng(0, 0).next() == 0xE220A8397B1DCDAF


def test_trial_rng_deterministic_and_distinct():
    a, b = trial_rng(7, 3), trial_rng(7, 3)
    assert [a.next() for _ in range(5)] == [b.next() for _ in range(5)]
    assert trial_rng(0, 0).next() != trial_rng(0, 1).next()


def test_vector_splitmix_matches_scalar():
    idx = np.array([0, 1, 2, 12345, 2**40 + 7], dtype=np.uint64)
    vec = VectorSplitMix64(0xDEADBEEF, idx)
    scalars = [trial_rng(0xDEADBEEF, int(i)) for i in idx]
    for _ in range(6):
        assert [int(x) for x in vec.next()] == [s.next() for s in scalars]


@pytest.mark.parametrize("mode", ["random", "burst"])
@pytest.mark.parametrize("k", [1, 2, 5, 14])
def test_vector_sites_match_scalar(mode, k):
    idx = np.arange(300, dtype=np.uint64)
    got = _vector_sites(VectorSplitMix64(11, idx), 40, k, mode)
    for i in range(300):
        assert tuple(got[i]) == sample_sites(trial_rng(11, i), 40, k, mode)


def test_sample_pattern_properties():
    p = sample_pattern(trial_rng(1, 1), 20, 20, "random")
    assert sorted(p.sites) == list(range(20))
    p = sample_pattern(trial_rng(1, 2), 20, 1, "burst")
    assert len(p.sites) == 1 and 0 <= p.sites[0] < 20
    p = sample_pattern(trial_rng(1, 3), 50, 7, "burst", "sa1")
    assert list(p.sites) == list(range(p.sites[0], p.sites[0] + 7)) and p.polarities == (1,) * 7
    assert sample_pattern(trial_rng(9, 9), 30, 6, "random") == sample_pattern(trial_rng(9, 9), 30, 6, "random")
    assert len(set(sample_pattern(trial_rng(9, 4), 30, 12, "random").sites)) == 12
    with pytest.raises(ValueError):
        sample_pattern(trial_rng(0, 0), 5, 6, "random")


def test_run_trial_examples(sbox_dual, xor_dual):
    assert run_trial(sbox_dual, FaultPattern((), ()), 0x53) is Outcome.MASKED
    assert run_trial(xor_dual, [(0, 1), (1, 1)], [0, 0]) is Outcome.DETECTED


def test_output_rail_fault_detected_when_value_differs(sbox, sbox_dual):
    table = sbox.truth_table()
    for o, name in enumerate(sbox.outputs):
        hi, lo = sbox_dual.pairs[name]
        for x in (0x00, 0x53, 0xFF):
            correct = (table[x] >> o) & 1
            stuck = 1 - correct
            assert run_trial(sbox_dual, [(hi, stuck)], x) is Outcome.DETECTED
            assert run_trial(sbox_dual, [(lo, correct)], x) is Outcome.DETECTED


def test_all_output_rails_stuck_never_sdc(sbox_dual):
    nets = [n for pair in sbox_dual.outputs for n in pair]
    for pol in (0, 1):
        for x in range(256):
            assert run_trial(sbox_dual, [(n, pol) for n in nets], x) is not Outcome.SDC


def test_fault_coverage_formula():
    assert fault_coverage(1000, 2) == pytest.approx(0.998)
    s = Stratum("sa0", "random", 3)
    s.add(500, 498, 2)
    assert s.trials == 1000 and s.fc == pytest.approx(0.998)
    with pytest.raises(ValueError):
        fault_coverage(0, 0)


def test_config_validation(xor_dual):
    with pytest.raises(ValueError):
        CampaignConfig(trials=0, sizes=(1,)).validate()
    with pytest.raises(ValueError):
        CampaignConfig(sizes=()).validate()
    with pytest.raises(ValueError):
        CampaignConfig(polarity="sa2").validate()
    with pytest.raises(ValueError):
        CampaignConfig(sizes=(17,), trials=10).validate(xor_dual.site_count)


def test_allocation_even_split():
    alloc = CampaignConfig(trials=400_000).allocation()
    assert [n for _, _, n in alloc] == [28572] * 6 + [28571] * 8
    assert sum(n for _, _, n in alloc) == 400_000
    assert [s for _, s, _ in alloc][1] == 28572


@pytest.mark.parametrize("polarity", ["sa0", "sa1", "mixed"])
@pytest.mark.parametrize("mode", ["random", "burst"])
def test_batch_engine_matches_scalar_replay(sbox_dual, polarity, mode):
    cfg = CampaignConfig(polarity=polarity, mode=mode, sizes=(1, 3, 9), trials=150, seed=42)
    report, records = run_campaign(sbox_dual, cfg, keep_trials=True, chunk=64)
    assert len(records) == 150
    starts = {k: s for k, s, _ in cfg.allocation()}
    for r in records:
        vec, pattern = draw_trial(sbox_dual, cfg, r.fault_size, starts[r.fault_size], r.trial)
        assert (vec, pattern.sites, pattern.polarities) == (r.input, r.sites, r.polarities)
        assert run_trial(sbox_dual, pattern, vec) is r.outcome
    counts = Counter(r.outcome for r in records)
    tot = report.total
    assert (tot.masked, tot.detected, tot.sdc) == (counts[Outcome.MASKED], counts[Outcome.DETECTED], counts[Outcome.SDC])


def test_exhaustive_input_policy(xor_dual):
    cfg = CampaignConfig(sizes=(1,), trials=8, input_policy="exhaustive")
    _, records = run_campaign(xor_dual, cfg, keep_trials=True)
    assert [r.input for r in records] == [0, 1, 2, 3, 0, 1, 2, 3]


def test_stratum_accounting(sbox_dual):
    report, _ = run_campaign(sbox_dual, CampaignConfig(trials=2800, seed=5))
    for s in report.strata:
        assert s.masked + s.detected + s.sdc == s.trials == 200
        assert 0.0 <= s.fc <= 1.0
    assert report.total.trials == 2800


def test_campaign_independent_of_chunking_and_workers(sbox_dual):
    cfg = CampaignConfig(polarity="sa1", mode="burst", trials=3000, seed=9)
    a, _ = run_campaign(sbox_dual, cfg, workers=1)
    b, _ = run_campaign(sbox_dual, cfg, workers=2, chunk=500)
    assert summary_csv(a) == summary_csv(b)


@pytest.mark.parametrize("kind", ["and", "or", "xor", "nand", "nor", "xnor"])
def test_single_gate_exhaustive_has_no_sdc(kind):
    d = expand_dual_rail(parse_netlist(f"input a b\noutput y\ngate {kind} y a b\n"))
    report, cex = exhaustive_single_fault(d)
    assert cex == [] and report.sdc == 0 and report.total.trials == 16 * 2 * 4
    rep, _ = run_campaign(d, CampaignConfig(sizes=(1,), trials=500, polarity="sa1"))
    assert rep.fc == 1.0


def test_not_only_netlist_exhaustive():
    d = expand_dual_rail(parse_netlist(NOT_TEXT))
    report, cex = exhaustive_single_fault(d)
    assert cex == [] and report.total.trials == 2 * 2 * 2
    assert report.total.masked + report.total.detected == 8


def test_exhaustive_needs_budget_above_20_inputs():
    text = "input " + " ".join(f"i{j}" for j in range(22)) + "\noutput y\ngate xor y i0 i21\n"
    d = expand_dual_rail(parse_netlist(text))
    with pytest.raises(ValueError):
        exhaustive_single_fault(d)
    report, cex = exhaustive_single_fault(d, input_budget=64, seed=2)
    assert report.total.trials == d.site_count * 2 * 64 and cex == []


# chi-squared 0.999 quantiles by degrees of freedom
CHI2_999 = {1: 10.83, 2: 13.82}


@pytest.mark.parametrize("text", [XOR_TEXT, "input a\noutput y\ngate and y a a\n"])
@pytest.mark.parametrize("mode", ["random", "burst"])
@pytest.mark.parametrize("polarity", ["sa0", "sa1"])
@pytest.mark.parametrize("k", [2, 3])
def test_random_campaign_matches_exhaustive_enumeration(text, mode, polarity, k):
    d = expand_dual_rail(parse_netlist(text))
    S, n_in = d.site_count, len(d.source.inputs)
    pol = 0 if polarity == "sa0" else 1
    if mode == "random":
        patterns = list(itertools.combinations(range(S), k))
    else:
        patterns = [tuple(range(s, s + k)) for s in range(S - k + 1)]
    exact = Counter()
    for pat in patterns:
        for x in range(1 << n_in):
            exact[run_trial(d, [(s, pol) for s in pat], x)] += 1
    total = sum(exact.values())
    N = 20_000
    report, _ = run_campaign(d, CampaignConfig(polarity=polarity, mode=mode, sizes=(k,), trials=N, seed=123))
    s = report.strata[0]
    observed = {Outcome.MASKED: s.masked, Outcome.DETECTED: s.detected, Outcome.SDC: s.sdc}
    stat, df = 0.0, -1
    for o in Outcome:
        expected = N * exact[o] / total
        if expected == 0:
            assert observed[o] == 0
            continue
        stat += (observed[o] - expected) ** 2 / expected
        df += 1
    if df > 0:
        assert stat < CHI2_999[df]
