"""Structured character-style extraction: lexical, syntactic and pragmatic components."""

from .corpus_io import (Corpus, EmbeddingTable, StopwordList, Utterance, balance_corpora,
                        filter_tokens, load_corpus, load_embeddings, load_stopwords)
from .dataset import (OversamplePlan, TrainingPair, build_pairs, oversample_pairs,
                      oversample_report, render_cot_target, render_instruction_prompt,
                      validate_dataset)
from .errors import CorpusError, StyleError, TreeParseError
from .evaluation import (ParetoPoint, ScoredSample, aggregate_report, h_score, pareto_frontier,
                         tau_sensitivity, valid_style_score)
from .lexical import TfPmiLexicon, UnigramDistribution, build_lexicon, global_distribution, pmi
from .refiner import (LabelSet, RefinerConfig, RefinerModel, default_labels, macro_f1,
                      optimize_thresholds, predict, train_refiner)
from .style_vector import (StructuredStyleVector, StyleExtractor, assemble, composite_similarity,
                           nshot_stability)
from .syntactic import (RuleMapping, SyntacticVector, coverage, load_mapping,
                        log_likelihood_ratio, map_to_style_vector, pcfg_probabilities, rank_rules)
from .treebank import ParseTree, Production, ProductionTable, count_productions, parse_bracketed_tree

__version__ = "0.1.0"
