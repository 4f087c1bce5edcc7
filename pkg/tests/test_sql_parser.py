from __future__ import annotations

import pytest

from text2sql.errors import SqlSyntaxError, UnknownColumnError
from text2sql.sql_eval import parse_sql, render_sql
from text2sql.sql_eval.parser import ColUnit, Literal


def test_distinct_select_with_value_condition(registry):
    tree = parse_sql(
        "SELECT DISTINCT building FROM classroom WHERE capacity  >  50",
        registry["college_2"],
    )
    assert tree.select_distinct
    item = tree.select[0]
    assert item.agg == "none"
    assert item.val.left == ColUnit(agg="none", column="classroom.building", distinct=False)
    cond = tree.where_conjuncts[0]
    assert cond.left.left.column == "classroom.capacity"
    assert cond.op == ">"
    assert cond.value1 == Literal(kind="num", value=50.0)


def test_select_star(registry):
    tree = parse_sql("SELECT * FROM classroom", registry["college_2"])
    assert tree.select[0].val.left.column == "*"
    assert not tree.select_distinct


def test_three_table_join_conditions(registry):
    sql = (
        "SELECT count(DISTINCT T2.id) ,  count(DISTINCT T3.id) ,  T3.dept_name "
        "FROM department AS T1 JOIN student AS T2 ON T1.dept_name  =  T2.dept_name "
        "JOIN instructor AS T3 ON T1.dept_name  =  T3.dept_name GROUP BY T3.dept_name"
    )
    tree = parse_sql(sql, registry["college_2"])
    assert tree.named_tables() == ("department", "student", "instructor")
    pairs = {
        (c.left.left.column, c.value1.column)
        for c in tree.join_conditions
        if isinstance(c.value1, ColUnit)
    }
    assert pairs == {
        ("department.dept_name", "student.dept_name"),
        ("department.dept_name", "instructor.dept_name"),
    }
    assert tree.select[0].agg == "count"
    assert tree.select[0].val.left.distinct


def test_case_insensitive_table_and_column_resolution(registry):
    tree = parse_sql(
        "SELECT YEAR FROM SECTION GROUP BY YEAR ORDER BY count(*) DESC LIMIT 1",
        registry["college_2"],
    )
    assert tree.named_tables() == ("section",)
    assert tree.group_by[0].column == "section.year"
    assert tree.order_by.direction == "desc"
    assert tree.order_by.keys[0].left.agg == "count"
    assert tree.limit == 1


def test_unqualified_column_resolves_to_first_from_table(registry):
    sql = ("SELECT dept_name FROM department AS T1 "
           "JOIN instructor AS T2 ON T1.dept_name = T2.dept_name")
    tree = parse_sql(sql, registry["college_2"])
    assert tree.select[0].val.left.column == "department.dept_name"


def test_nested_set_operation(registry):
    sql = ("SELECT id FROM teaches WHERE semester  =  'Fall' AND YEAR  =  2009 "
           "EXCEPT SELECT id FROM teaches WHERE semester  =  'Spring' AND YEAR  =  2010")
    tree = parse_sql(sql, registry["college_2"])
    assert tree.set_op is not None
    op, rest = tree.set_op
    assert op == "except"
    assert rest.where_conjuncts[0].value1 == Literal(kind="str", value="Spring")
    assert tree.where_connectors == ("and",)


def test_predicate_subquery(registry):
    sql = "SELECT title FROM course WHERE course_id NOT IN (SELECT course_id FROM prereq)"
    tree = parse_sql(sql, registry["college_2"])
    cond = tree.where_conjuncts[0]
    assert cond.negated and cond.op == "in"
    sub = cond.value1
    assert sub.named_tables() == ("prereq",)
    assert tree.predicate_subqueries() == (sub,)


def test_between_condition(registry):
    tree = parse_sql(
        "SELECT building FROM classroom WHERE capacity BETWEEN 50 AND 100",
        registry["college_2"],
    )
    cond = tree.where_conjuncts[0]
    assert cond.op == "between"
    assert (cond.value1, cond.value2) == (
        Literal(kind="num", value=50.0), Literal(kind="num", value=100.0))


def test_arithmetic_value_unit(registry):
    tree = parse_sql(
        "SELECT end_hr - start_hr FROM time_slot", registry["college_2"])
    val = tree.select[0].val
    assert val.op == "-"
    assert (val.left.column, val.right.column) == ("time_slot.end_hr", "time_slot.start_hr")


def test_syntax_error_carries_position(registry):
    with pytest.raises(SqlSyntaxError):
        parse_sql("SELECT FROM WHERE", registry["college_2"])
    with pytest.raises(SqlSyntaxError):
        parse_sql("SELECT name FROM student WHERE ???", registry["college_2"])


def test_unknown_column_is_named(registry):
    with pytest.raises(UnknownColumnError, match="nonexistent"):
        parse_sql("SELECT nonexistent FROM student", registry["college_2"])


def test_unknown_table_rejected(registry):
    with pytest.raises(SqlSyntaxError):
        parse_sql("SELECT x FROM not_a_table", registry["college_2"])


@pytest.mark.parametrize("sql", [
    "SELECT name FROM student WHERE name IS NOT NULL",
    "SELECT name FROM student, takes WHERE student.ID = takes.ID",
    "SELECT name FROM student WHERE dept_name IN ('History', 'Music')",
    "SELECT name FROM student LEFT JOIN takes ON student.ID = takes.ID",
])
def test_out_of_grammar_constructs_rejected(registry, sql):
    with pytest.raises((SqlSyntaxError, UnknownColumnError)):
        parse_sql(sql, registry["college_2"])


def test_every_gold_query_round_trips(items, registry):
    for item in items:
        schema = registry[item.db_id]
        tree = parse_sql(item.gold_sql, schema)
        rendered = render_sql(tree)
        again = parse_sql(rendered, schema)
        assert again == tree, f"round trip drift for: {item.gold_sql}"
