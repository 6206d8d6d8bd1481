"""
Character keywords with TF-PMI
==============================

Two tiny corpora share most of their vocabulary. TF-PMI surfaces the words
that one character uses far more than the pooled population does.
"""

from charstyle.corpus_io import StopwordList, balance_corpora, filter_tokens, parse_corpus_lines
from charstyle.lexical import UnigramDistribution, build_lexicon, global_distribution, pmi

lines = [
    "m1\tmika\t喵 ～ 今天 的 蛋糕 好 好吃 喵 ！",
    "m2\tmika\t主人 主人 ， 一起 玩 嘛 喵",
    "m3\tmika\t嘿嘿 ， 我 最 喜欢 布丁 了 喵",
    "s1\tsora\t其实 这个 问题 的 答案 并不 复杂 。",
    "s2\tsora\t或许 我们 应该 先 分析 原因 。",
    "s3\tsora\t我 认为 今天 的 讨论 很 重要 。",
]
mika = parse_corpus_lines(lines, "mika")
sora = parse_corpus_lines(lines, "sora")

# drop stopwords and punctuation, then equalize token counts
stop = StopwordList(frozenset({"的", "了"}))
mika, report = filter_tokens(mika, stop)
sora, _ = filter_tokens(sora, stop)
print("removed tokens from mika:", report.removed_tokens)
mika, sora = balance_corpora([mika, sora], [1, 1], seed=0)
print("token counts after balancing:", mika.token_count, sora.token_count)

# the global distribution pools every character
g = global_distribution([mika, sora])
style = UnigramDistribution.from_corpus(mika)
print("PMI(喵 | mika) = %.3f bits" % pmi("喵", style, g))

# at this toy scale every word exceeds 10% of the pool, so the default
# frequency filter would exclude all of them; relax it for the demo
lex = build_lexicon(mika, g, max_global_prob=0.5, min_style_prob=0.0, capacity=5)
print(lex.to_tsv())
