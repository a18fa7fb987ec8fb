"""
语料统计测试
"""
import datetime as dt
import json
from collections import defaultdict

import numpy as np
import pytest

from app.schemas import DebateMeta, SpeakerRef, Utterance
from app.services.stats_service import (
    DebateCounts, StatsAccumulator, compute_stats, merge_accumulators, render_csv_report, render_json_report,
    word_count,
)
from tests.generators import debate_from_counts, random_counts_corpus


def counts(legislature: int, number: int, date: dt.date, *words: int) -> DebateCounts:
    return DebateCounts(meta=DebateMeta(legislature=legislature, session=1, number=number, date=date), words=words)


def accumulate_counts(corpus) -> StatsAccumulator:
    accumulator = StatsAccumulator()
    for item in corpus:
        accumulator.add_counts(item)
    return accumulator


@pytest.mark.parametrize("text, expected", [
    ("Sr. Presidente, a proposta de lei é boa.", 8),
    ("Não.", 1),
    ("  espaços   múltiplos\tentre palavras ", 4),
])
def test_word_count(text, expected):
    u = Utterance(order=1, page_start=1, speaker_string="O Sr. Presidente", speaker=SpeakerRef.president(), text=text)
    assert word_count(u) == expected


def test_mean_words_per_utterance():
    stats = accumulate_counts([counts(1, 1, dt.date(1976, 6, 3), 2, 19, 300)]).finalize()
    assert f"{stats.words_per_utterance.mean:.2f}" == "107.00"
    assert stats.words_per_utterance.median == 19
    assert stats.words_per_utterance.max == 300


def test_empty_corpus():
    stats = compute_stats([])
    assert stats.n_debates == 0
    assert stats.utterances_per_debate is None
    assert stats.words_per_utterance is None
    assert stats.legislatures == ()
    assert render_csv_report(stats).splitlines()[-1].startswith("legislature,")


def test_matches_numpy_oracle(rng):
    """与numpy直接计算的结果比对"""
    for _ in range(200):
        corpus = random_counts_corpus(rng)
        stats = accumulate_counts(corpus).finalize()

        per_debate = np.array([len(c.words) for c in corpus])
        per_utterance = np.concatenate([np.array(c.words) for c in corpus])
        for summary, values in ((stats.utterances_per_debate, per_debate), (stats.words_per_utterance, per_utterance)):
            assert summary.count == len(values)
            assert summary.mean == pytest.approx(np.mean(values))
            assert summary.median == pytest.approx(np.median(values))
            assert summary.sd_population == pytest.approx(np.std(values), abs=1e-9)
            if len(values) > 1:
                assert summary.sd_sample == pytest.approx(np.std(values, ddof=1), abs=1e-9)
            else:
                assert summary.sd_sample is None
            assert summary.max == values.max()
            assert summary.sd == summary.sd_population

        grouped = defaultdict(list)
        for c in corpus:
            grouped[c.meta.legislature].append(c)
        assert [row.legislature for row in stats.legislatures] == sorted(grouped)
        for row in stats.legislatures:
            group = grouped[row.legislature]
            assert row.n_debates == len(group)
            assert row.start_date == min(c.meta.date for c in group)
            assert row.end_date == max(c.meta.date for c in group)
            assert row.mean_utterances_per_debate == pytest.approx(np.mean([len(c.words) for c in group]))
            assert row.mean_words_per_utterance == pytest.approx(np.mean(np.concatenate([c.words for c in group])))


def test_merge_equals_union(rng):
    for _ in range(50):
        corpus = random_counts_corpus(rng)
        shards = [[] for _ in range(rng.randint(1, 6))]
        for item in corpus:
            rng.choice(shards).append(item)
        rng.shuffle(shards)
        merged = merge_accumulators(accumulate_counts(shard) for shard in shards)
        assert merged.finalize() == accumulate_counts(corpus).finalize()


def test_debates_and_counts_agree(rng):
    for _ in range(20):
        corpus = random_counts_corpus(rng, max_debates=10, max_utterances=30)
        assert compute_stats(debate_from_counts(c) for c in corpus) == accumulate_counts(corpus).finalize()


def test_duplicate_debate_ignored():
    accumulator = StatsAccumulator()
    item = counts(1, 1, dt.date(1976, 6, 3), 5, 6)
    assert accumulator.add_counts(item) is True
    assert accumulator.add_counts(item) is False
    stats = accumulator.finalize()
    assert stats.n_debates == 1
    assert stats.words_per_utterance.count == 2


def test_sample_convention():
    stats = compute_stats([debate_from_counts(counts(1, 1, dt.date(1976, 6, 3), 2, 19, 300))], sd="sample")
    assert stats.sd_convention == "sample"
    assert stats.words_per_utterance.sd == pytest.approx(np.std([2, 19, 300], ddof=1))


class TestReports:

    def setup_method(self):
        self.stats = accumulate_counts([
            counts(1, 1, dt.date(1976, 6, 3), 2, 19, 300),
            counts(2, 1, dt.date(1980, 1, 1), 5),
        ]).finalize()

    def test_csv(self):
        lines = render_csv_report(self.stats).splitlines()
        assert all(line.startswith("# ") for line in lines[:2])
        assert lines[2:] == [
            "legislature,start_date,end_date,n_debates,mean_utterances_per_debate,mean_words_per_utterance",
            "1,1976-06-03,1976-06-03,1,3.00,107.00",
            "2,1980-01-01,1980-01-01,1,1.00,5.00",
            "all,1976-06-03,1980-01-01,2,2.00,81.50",
        ]

    def test_json(self):
        data = json.loads(render_json_report(self.stats))
        assert data["n_debates"] == 2
        assert data["words_per_utterance"]["mean"] == 81.5
        assert data["words_per_utterance"]["median"] == 12.0
        assert "sd_sample" not in data["words_per_utterance"]
        assert [row["legislature"] for row in data["legislatures"]] == [1, 2]
        assert data["notes"]

    def test_json_verbose(self):
        data = json.loads(render_json_report(self.stats, verbose=True))
        words = data["words_per_utterance"]
        assert words["sd_population"] == round(float(np.std([2, 19, 300, 5])), 2)
        assert words["sd_sample"] == round(float(np.std([2, 19, 300, 5], ddof=1)), 2)
