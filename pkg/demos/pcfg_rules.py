"""
Syntactic style from production rules
=====================================

Parse bracketed trees, estimate per-LHS rule probabilities, rank rules by
log-likelihood ratio against a baseline and pool them into a syntactic
style vector.
"""

from charstyle.syntactic import (coverage, format_rule_table, load_mapping, log_likelihood_ratio,
                                 map_to_style_vector, pcfg_probabilities, rank_rules)
from charstyle.treebank import Production, count_productions, extract_productions, parse_bracketed_tree

tree = parse_bracketed_tree("(TOP (CP (IP (NP (NN 猫)) (VP (ADVP (AD 超级)) (VP (VA 可爱)))) (SP 呀) (PU ！)))")
print("leaves:", tree.leaves())
for rule in extract_productions(tree):
    print("  ", rule)

style_trees = [
    "(TOP (IP (INTJ (IJ 哇)) (PU ，) (VP (VV 吃) (NP (NN 鱼)))))",
    "(TOP (CP (IP (NP (NN 猫)) (VP (VA 可爱))) (SP 呀)))",
    "(TOP (IP (NP (NN 猫) (CC 和) (NN 鱼)) (VP (VA 可爱))))",
    "(TOP (CP (IP (NP (PN 你)) (VP (VV 喜欢) (NP (NN 我)))) (SP 呀)))",
]
base_trees = [
    "(TOP (IP (NP (PN 我)) (VP (VV 去) (NP (NN 学校)))))",
    "(TOP (IP (NP (PN 他)) (VP (PP (P 在) (NP (NN 家))) (VP (VV 工作)))))",
    "(TOP (IP (VP (VV 看) (NP (NN 书))) (PU 。)))",
]
style = count_productions(parse_bracketed_tree(t) for t in style_trees)
base = count_productions(parse_bracketed_tree(t) for t in base_trees)

model = pcfg_probabilities(style)
print("\nP(NP → NN) in the style corpus: %.3f" % model[Production.parse("NP → NN")])

# rules the baseline never uses get a floored probability ratio, marked with *
print("\n" + format_rule_table(rank_rules(style, base, top_k=6)))

# the log-likelihood ratio on its own
print("LLR(30/100 vs 10/200) = %.3f" % log_likelihood_ratio(30, 100, 10, 200))

mapping = load_mapping()
vec = map_to_style_vector(style, mapping)
print("\ntop syntactic dimensions:", vec.top(4))
print("coverage: %.1f%%" % coverage(style, mapping).coverage_pct)
