import pytest

from src.core.report_storage import ReportStorage


@pytest.fixture
def storage(tmp_path):
    store = ReportStorage(str(tmp_path / "ledger" / "runs.db"))
    yield store
    store.close()


def test_record_and_fetch_run(storage):
    report = {"schema": 1, "suites": [{"name": "fannes", "total": 10, "passed": 10},
                                      {"name": "witness", "total": 4, "passed": 3}]}
    run_id = storage.record_run("verify", 1, {"command": "verify"}, report, 1)
    assert run_id is not None
    assert storage.get_report(run_id) == report

    history = storage.get_run_history()
    assert list(history["command"]) == ["verify"]
    assert history["exit_code"].iloc[0] == 1

    suites = storage.get_suite_history()
    assert list(suites["suite"]) == ["fannes", "witness"]
    assert storage.get_suite_history("witness")["passed"].iloc[0] == 3


def test_history_filters_by_command(storage):
    storage.record_run("dilute", None, {}, {"gates": 3}, 0)
    storage.record_run("decide", 7, {}, {"decision": "p ≥ 2/3"}, 0)
    assert list(storage.get_run_history("decide")["seed"]) == [7]
    assert len(storage.get_run_history(limit=1)) == 1
    assert storage.get_report(999) is None


def test_reopen_keeps_rows(tmp_path):
    path = str(tmp_path / "runs.db")
    first = ReportStorage(path)
    first.record_run("verify", 1, {}, {}, 0)
    first.close()
    second = ReportStorage(path)
    assert len(second.get_run_history()) == 1
    second.close()
