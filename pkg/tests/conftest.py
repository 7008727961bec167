import random

from syllabudget.pipeline import Domain


def random_han(rng: random.Random, n: int) -> str:
    return "".join(chr(rng.randint(0x4E00, 0x9FA5)) for _ in range(n))


def synthetic_transcripts(per_domain: int = 25, segments_per_video: int = 10, seed: int = 0) -> list[dict]:
    """Transcripts whose segments are distinct random Han lines at about 5 chars/s.

    Each character is one timed token; segments are separated by a 1.5 s pause.
    """
    rng = random.Random(seed)
    rows = []
    for domain in Domain:
        for v in range(per_domain):
            tokens, t = [], 0.0
            for _ in range(segments_per_video):
                for ch in random_han(rng, rng.randint(12, 24)):
                    tokens.append({"text": ch, "start_s": round(t, 3), "end_s": round(t + 0.2, 3)})
                    t += 0.2
                t += 1.5
            rows.append({"video_id": f"{domain.value}-{v:03d}", "domain": domain.value, "tokens": tokens})
    return rows


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
