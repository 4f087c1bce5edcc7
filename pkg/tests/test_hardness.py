from __future__ import annotations

from collections import Counter

from spider_oracle import oracle_hardness
from text2sql.sql_eval import hardness, hardness_of_sql, parse_sql


def test_minimal_query_is_easy(registry):
    assert hardness_of_sql("SELECT name FROM student", registry["college_2"]) == "easy"


def test_nested_except_query_is_extra(registry):
    sql = ("SELECT id FROM teaches WHERE semester  =  'Fall' AND YEAR  =  2009 "
           "EXCEPT SELECT id FROM teaches WHERE semester  =  'Spring' AND YEAR  =  2010")
    assert hardness_of_sql(sql, registry["college_2"]) == \
        oracle_hardness(registry["college_2"].db_file_path, sql) == "extra"


def test_every_gold_level_matches_the_reference_script(items, registry):
    mismatches = []
    for item in items:
        schema = registry[item.db_id]
        mine = hardness(parse_sql(item.gold_sql, schema))
        official = oracle_hardness(schema.db_file_path, item.gold_sql)
        if mine != official:
            mismatches.append((item.db_id, item.gold_sql, mine, official))
    assert not mismatches, f"{len(mismatches)} level mismatches: {mismatches[:5]}"


def test_distribution_covers_all_levels(items, registry):
    levels = Counter(
        hardness(parse_sql(item.gold_sql, registry[item.db_id])) for item in items
    )
    assert set(levels) == {"easy", "medium", "hard", "extra"}
