"""Report aggregation tests against the checked-in outcome grid fixture."""

from __future__ import annotations

import json

from conftest import FIXTURES
from pocsmith.evaluation.report import (
    ReportRow,
    aggregate_levels,
    aggregate_rq1,
    aggregate_rq2,
    find_grid_gaps,
    render_rq1_table,
    render_rq2_table,
    render_rq3_table,
    write_csv,
)

GLM = "z-ai/glm-4.6"
O3 = "openai/o3"
CLAUDE = "anthropic/claude-sonnet-4.5"


def load_grid_rows(name: str) -> list[ReportRow]:
    payload = json.loads((FIXTURES / "paper_grid" / name).read_text())
    return [
        ReportRow(
            finding_id=r["finding_id"],
            strategy=r["strategy"],
            model=r["model"],
            rq1_verdict=r["rq1_verdict"],
            rq2_verdict=r.get("rq2_verdict"),
            annotation_level=r.get("annotation_level"),
        )
        for r in payload["records"]
    ]


class TestGridAggregation:
    def test_well_formed_totals(self):
        counts = aggregate_rq1(load_grid_rows("rq1_rq2.json"))
        well_formed = {key: c.get("WellFormed", 0) for key, c in counts.items()}
        assert well_formed[("prompting", GLM)] == 0
        assert well_formed[("prompting", O3)] == 3
        assert well_formed[("prompting", CLAUDE)] == 1
        assert well_formed[("workflow", GLM)] == 0
        assert well_formed[("workflow", O3)] == 13
        assert well_formed[("workflow", CLAUDE)] == 9
        assert well_formed[("agent", GLM)] == 16
        assert well_formed[("agent", O3)] == 19
        assert well_formed[("agent", CLAUDE)] == 15

    def test_failure_mode_totals(self):
        counts = aggregate_rq1(load_grid_rows("rq1_rq2.json"))
        assert counts[("prompting", GLM)]["CF"] == 22
        assert counts[("prompting", O3)]["CF"] == 17
        assert counts[("prompting", CLAUDE)]["CF"] == 20
        assert counts[("prompting", O3)]["IA"] == 3
        assert counts[("workflow", GLM)]["MT"] == 23
        assert counts[("workflow", O3)]["MT"] == 10
        assert counts[("workflow", CLAUDE)]["MT"] == 14
        assert counts[("agent", GLM)]["MT"] == 6
        assert counts[("agent", O3)]["MC"] == 3
        assert counts[("agent", CLAUDE)]["MC"] == 8
        for key in counts:
            assert counts[key].get("NA", 0) == 0

    def test_correct_totals(self):
        counts = aggregate_rq2(load_grid_rows("rq1_rq2.json"))
        assert counts[("agent", GLM)]["Correct"] == 7
        assert counts[("agent", O3)]["Correct"] == 14
        assert counts[("agent", CLAUDE)]["Correct"] == 11
        assert counts[("workflow", O3)]["Correct"] == 8
        assert counts[("workflow", CLAUDE)]["Correct"] == 3
        assert counts[("prompting", O3)]["Correct"] == 2
        assert counts[("prompting", CLAUDE)]["Correct"] == 1

    def test_evaluated_counts_match_well_formed(self):
        rows = load_grid_rows("rq1_rq2.json")
        rq1 = aggregate_rq1(rows)
        rq2 = aggregate_rq2(rows)
        for key, counter in rq2.items():
            assert counter["Evaluated"] == rq1[key].get("WellFormed", 0)

    def test_level_totals(self):
        counts = aggregate_levels(load_grid_rows("rq3.json"))
        assert counts["high_level"]["Correct"] == 1
        assert counts["detailed"]["Correct"] == 3
        assert counts["procedural"]["Correct"] == 5
        assert counts["high_level"]["IllFormed"] == 7
        assert counts["detailed"]["IllFormed"] == 6
        assert counts["procedural"]["IllFormed"] == 4
        assert counts["high_level"]["Incorrect"] == 1


class TestRendering:
    def test_rq1_table_marks_inapplicable_cells(self):
        table = render_rq1_table(load_grid_rows("rq1_rq2.json"))
        header, _, *lines = table.splitlines()
        columns = [c.strip() for c in header.split("|")]
        mc_row = next(line for line in lines if line.startswith("Total MC"))
        mc_cells = [c.strip() for c in mc_row.split("|")]
        for index, column in enumerate(columns):
            if column.startswith("prompting/"):
                assert mc_cells[index] == "n/a"
        cf_row = next(line for line in lines if line.startswith("Total CF"))
        cf_cells = [c.strip() for c in cf_row.split("|")]
        for index, column in enumerate(columns):
            if column.startswith("workflow/"):
                assert cf_cells[index] == "n/a"

    def test_rq2_table_totals_row(self):
        table = render_rq2_table(load_grid_rows("rq1_rq2.json"))
        assert "Total Correct" in table

    def test_rq3_table(self):
        table = render_rq3_table(load_grid_rows("rq3.json"))
        assert "Total Ill-formed | 7 | 6 | 4" in table
        assert "Total Correct | 1 | 3 | 5" in table


class TestCsvAndGaps:
    def test_csv_columns_and_rows(self, tmp_path):
        rows = load_grid_rows("rq1_rq2.json")
        text = write_csv(rows, tmp_path / "out.csv")
        lines = text.splitlines()
        assert lines[0] == "finding_id,strategy,model,rq1_verdict,rq2_verdict,cost_usd,sc_tool_calls,duration_ms"
        assert len(lines) == 1 + len(rows)

    def test_gaps_reported_not_zero_filled(self):
        rows = load_grid_rows("rq1_rq2.json")
        gaps = find_grid_gaps(rows, ["001", "003", "999"], ["agent"], [GLM])
        assert gaps == [("999", "agent", GLM)]

    def test_empty_record_set_is_all_gaps(self):
        gaps = find_grid_gaps([], ["001"], ["agent", "prompting"], [GLM])
        assert len(gaps) == 2
