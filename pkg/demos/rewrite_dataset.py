"""
Building the style-rewrite dataset
==================================

Align neutral and stylized records one to one, oversample characters to
target counts and render instruction prompts with reasoning targets.
"""

import numpy as np

from charstyle import dataset
from charstyle.lexical import TfPmiEntry, TfPmiLexicon
from charstyle.refiner import StyleProfile
from charstyle.style_vector import assemble
from charstyle.syntactic import SyntacticVector, load_mapping

neutrals = [dataset.NeutralRecord(f"n{i}", t) for i, t in enumerate(["今天天气不错。", "谢谢你。", "明天见。"])]
stylized = [
    dataset.StylizedRecord("n0", "mika", "今天天气超好的喵～", "可爱活泼，句尾加语气词", ("cute",)),
    dataset.StylizedRecord("n1", "mika", "嘿嘿，谢谢你喵！", "撒娇道谢", ("cute", "kind")),
]
pairs, report = dataset.build_pairs(neutrals, stylized)
print("pairs:", len(pairs), "| unaligned neutral:", report.unaligned_neutral)

# oversampling reproduces the published per-character rates
src = {"Muice": 2206, "Haruhi": 933, "Ayaka": 1358, "Hutao": 816, "Zhongli": 473}
tgt = {"Muice": 3118, "Haruhi": 1058, "Ayaka": 1464, "Hutao": 851, "Zhongli": 506}
print(dataset.format_oversample_report(dataset.oversample_report(src, dataset.OversamplePlan(tgt))))

final = dataset.oversample_pairs(pairs, dataset.OversamplePlan({"mika": 5}), seed=0)
print("after oversampling:", [p.id for p in final])
print("violations:", dataset.validate_dataset(final))

mapping = load_mapping()
values = np.zeros(len(mapping.dimension_names))
values[:3] = [0.5, 0.3, 0.2]
s = assemble(TfPmiLexicon("mika", [TfPmiEntry("喵", 9, 3.1, 9.9), TfPmiEntry("主人", 4, 2.7, 6.4)]),
             SyntacticVector(mapping.dimension_names, values),
             StyleProfile("mika", {"cute": 0.66, "energetic": 0.57}))

p = final[0]
print("\n--- prompt ---")
print(dataset.render_instruction_prompt(s, p.neutral))
print("--- prompt without syntax ---")
print(dataset.render_instruction_prompt(s, p.neutral, mask={"syntactic"}))
print("--- target ---")
print(dataset.render_cot_target(p.cot_trace, p.stylized))
