"""
辩论边界与发言切分测试
"""
import datetime as dt

import pytest

from app.models import DocumentKind
from app.schemas import DebateMeta, Page, PagedText, RawDocument
from app.services.ingest_service import DocumentIngestor, get_document_ingestor
from app.services.segment_service import (
    BodyLine, DebateSegmenter, SegmentException, SpeakerLineMatcher, get_debate_segmenter,
)
from tests.conftest import GOLD_DIR, GOLD_DOCUMENT
from tests.generators import GOVERNMENT_SPEAKERS, build_registry, generate_diary, mp_speaker_string

META = DebateMeta(legislature=1, session=1, number=1, date=dt.date(1976, 6, 3))


def paged(*pages) -> PagedText:
    return PagedText(meta=META, pages=tuple(Page(number=i, lines=tuple(lines)) for i, lines in enumerate(pages, 1)))


def lines(*texts, page: int = 1):
    return [BodyLine(page, text) for text in texts]


class TestSpeakerLine:

    def setup_method(self):
        self.matcher = SpeakerLineMatcher(DebateSegmenter().config)

    @pytest.mark.parametrize("line", [
        "O Sr. Alberto Alves (AB): — Blah",
        "O Sr. Alberto Alves (AB):— Blah",
        "O Sr. Alberto Alves (AB) : – Blah",
        "O Sr. Alberto Alves (AB):  -  Blah",
    ])
    def test_dash_variants(self, line):
        assert self.matcher.match(line) == ("O Sr. Alberto Alves (AB)", "Blah")

    @pytest.mark.parametrize("line", [
        "Às 15: — abertura",
        "Artigo 12: — texto",
        "O Sr. Alberto Alves (AB): Blah",
        "O Sr. Alberto Alves (AB):   — três espaços",
        "X" * 121 + ": — texto",
    ])
    def test_rejected(self, line):
        assert self.matcher.match(line) is None


class TestDebateBounds:

    def setup_method(self):
        self.segmenter = DebateSegmenter()

    def test_opening_formula(self):
        pt = paged([
            "SUMÁRIO", "Texto do sumário.", "Srs. Deputados presentes.", "Ordem do dia.",
            "O Sr. Presidente: — Srs. Deputados, está aberta a sessão.",
            "O Sr. Alberto Alves (AB): — Blah",
        ])
        assert self.segmenter.detect_debate_bounds(pt) == (4, 6)

    def test_falls_back_to_first_utterance(self):
        pt = paged(["Sumário.", "O Sr. Alberto Alves (AB): — Blah"], ["Continua."])
        assert self.segmenter.detect_debate_bounds(pt) == (1, 3)
        result = self.segmenter.segment(pt)
        assert "no-opening-formula" in result.warnings

    def test_no_debate(self):
        pt = paged(["Sumário da reunião.", "Votações e expediente."])
        with pytest.raises(SegmentException) as exc:
            self.segmenter.detect_debate_bounds(pt)
        assert exc.value.code == "no-debate-found"


class TestAsides:

    def setup_method(self):
        self.segmenter = DebateSegmenter()

    @pytest.mark.parametrize("text", [
        "Aplausos do PS.", "Risos.", "(Protestos do CDS.)", "Vozes do PCP.",
        "(Pausa.)", "(Aplausos do PSD e do CDS).",
    ])
    def test_standalone_asides_removed(self, text):
        assert self.segmenter.clean_asides(lines(text)) == []

    def test_inline_aside_kept(self):
        body = lines("Os aplausos do PS não mudam nada.", "O Sr. Presidente: — Aplausos não são permitidos.")
        assert self.segmenter.clean_asides(body) == body

    def test_idempotent(self):
        body = lines("O Sr. Presidente: — Bom dia.", "Risos.", "Continua.", "(Pausa.)", "Vozes do AB.")
        once = self.segmenter.clean_asides(body)
        assert [line.text for line in once] == ["O Sr. Presidente: — Bom dia.", "Continua."]
        assert self.segmenter.clean_asides(once) == once


class TestSessionEnd:

    def setup_method(self):
        self.segmenter = DebateSegmenter()

    def test_hours(self):
        body = lines("O Sr. Presidente: — Está encerrada a sessão.", "Eram 18 horas.", "Deputados presentes.")
        assert self.segmenter.detect_session_end(body) == (2, None)

    def test_hours_and_minutes(self):
        body = lines("Eram 18 horas e 30 minutos.")
        assert self.segmenter.detect_session_end(body) == (1, None)

    def test_backward_scan_picks_last(self):
        body = lines("Eram 15 horas e 20 minutos.", "O Sr. Presidente: — Vamos terminar.", "Eram 18 horas.")
        assert self.segmenter.detect_session_end(body).position == 3

    def test_missing_session_end(self):
        body = lines("O Sr. Presidente: — Bom dia.")
        assert self.segmenter.detect_session_end(body) == (1, "no-session-end")

    def test_opening_time_is_not_a_closing(self):
        """开会后的时间行之后还有发言时，不是散会时间"""
        body = lines(
            "O Sr. Presidente: — Srs. Deputados, está aberta a sessão.",
            "Eram 15 horas e 20 minutos.",
            "O Sr. Alberto Alves (AB): — Blah",
            "Continua.",
        )
        assert self.segmenter.detect_session_end(body) == (4, "no-session-end")

    def test_gold_diary_without_closing_time(self):
        """删去金标准日志的散会时间后，12条发言都保留并给出警告"""
        text = (GOLD_DIR / "input" / f"{GOLD_DOCUMENT}.txt").read_text(encoding="utf-8")
        assert "Eram 18 horas.\n" in text
        raw = RawDocument(meta=META, body=text.replace("Eram 18 horas.\n", "").encode("utf-8"),
                          kind=DocumentKind.PAGED_TEXT)
        ingestor = DocumentIngestor()
        result = self.segmenter.segment(ingestor.clean_headers(ingestor.ingest(raw)))
        assert len(result.utterances) == 12
        assert result.warnings == ("no-session-end",)
        assert result.discarded_after_end == 0
        assert result.utterances[0].text.endswith("Eram 15 horas e 20 minutos.")

    def test_closing_time_stays_in_last_utterance(self):
        raw = RawDocument(meta=META, body=(GOLD_DIR / "input" / f"{GOLD_DOCUMENT}.txt").read_bytes(),
                          kind=DocumentKind.PAGED_TEXT)
        ingestor = DocumentIngestor()
        result = self.segmenter.segment(ingestor.clean_headers(ingestor.ingest(raw)))
        assert result.utterances[-1].text == "Srs. Deputados, está encerrada a sessão. Eram 18 horas."
        assert result.discarded_after_end == 2
        assert result.warnings == ()


class TestTagUtterances:

    def setup_method(self):
        self.segmenter = DebateSegmenter()

    def test_single_utterance(self):
        [u] = self.segmenter.tag_utterances(["O Sr. Alberto Alves (AB): — Blah"], [1])
        assert (u.speaker_string, u.text, u.order, u.page_start) == ("O Sr. Alberto Alves (AB)", "Blah", 1, 1)

    def test_continuation_on_next_page(self):
        utterances = self.segmenter.tag_utterances(
            ["O Sr. Alberto Alves (AB): — Primeira parte", "segunda parte."], [3, 4],
        )
        assert len(utterances) == 1
        assert utterances[0].page_start == 3
        assert utterances[0].text == "Primeira parte segunda parte."

    def test_consecutive_speaker_lines(self):
        utterances = self.segmenter.tag_utterances(
            ["O Sr. Presidente: — Tem a palavra.", "O Sr. Alberto Alves (AB): — Obrigado."], [1, 1],
        )
        assert [u.order for u in utterances] == [1, 2]

    def test_empty_utterance_skipped(self):
        utterances = self.segmenter.tag_utterances(
            ["O Sr. Presidente: —", "O Sr. Alberto Alves (AB): — Obrigado."], [1, 1],
        )
        assert [(u.order, u.speaker_string) for u in utterances] == [(1, "O Sr. Alberto Alves (AB)")]

    def test_no_utterances(self):
        with pytest.raises(SegmentException) as exc:
            self.segmenter.tag_utterances(["Texto corrido sem intervenções."], [1])
        assert exc.value.code == "no-utterances"


class TestGeneratedDiaries:

    def test_ground_truth(self, rng):
        """合成日志经导入、清理、切分后与生成器的真值完全一致"""
        ingestor = DocumentIngestor()
        segmenter = DebateSegmenter()
        records = build_registry(rng, 30)
        speakers = (
            [mp_speaker_string(rng, record) for record in records]
            + GOVERNMENT_SPEAKERS + ["O Sr. Presidente", "O Orador", "A Oradora", "O Sr. Presidente em exercício"]
        )
        for i in range(500):
            diary = generate_diary(rng, speakers, rng.randint(1, 40), first_page=rng.randint(1, 300))
            raw = RawDocument(meta=META, body=diary.text.encode("utf-8"), kind=DocumentKind.PAGED_TEXT,
                              first_page=diary.page_numbers[0])
            pt = ingestor.clean_headers(ingestor.ingest(raw))
            result = segmenter.segment(pt)

            assert list(result.utterances) == diary.utterances, f"第 {i} 篇日志切分不一致"
            assert result.asides_removed == diary.asides
            assert result.warnings == ()
            for u in result.utterances:
                assert ":" not in u.speaker_string
                assert u.speaker_string == u.speaker_string.strip()
            starts = [u.page_start for u in result.utterances]
            assert starts == sorted(starts)
            assert result.page_numbers[0] == diary.utterances[0].page_start
            assert set(result.page_numbers) <= set(diary.page_numbers)

    def test_texts_are_taken_from_body(self, rng):
        diary = generate_diary(rng, ["O Sr. Presidente", "O Orador"], 20)
        raw = RawDocument(meta=META, body=diary.text.encode("utf-8"), kind=DocumentKind.PAGED_TEXT)
        ingestor = get_document_ingestor()
        assert get_document_ingestor() is ingestor
        result = get_debate_segmenter().segment(ingestor.clean_headers(ingestor.ingest(raw)))
        source = " ".join(diary.text.split())
        position = 0
        for u in result.utterances:
            for word in u.text.split():
                position = source.index(word, position) + len(word)
