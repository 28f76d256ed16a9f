"""Siamese character-trigram Bi-LSTM text classifier.

Sentences from two corpora (possibly two languages) are encoded by one
shared Bi-LSTM into a common projection space, trained with a margin
cosine contrastive loss, and classified by voting against per-class
reference sets.
"""

from siamtext.corpus import (
    LabeledCorpus,
    LabeledSentence,
    PairDataset,
    PairSample,
    SynthClassSpec,
    build_pairs,
    generate_synthetic_corpus,
    load_labeled_corpus,
    split_corpus,
)
from siamtext.featurizer import (
    EncodedCorpus,
    SentenceEncoding,
    TrigramVocabulary,
    build_vocabulary,
    encode,
    encode_corpus,
    extract_trigrams,
)
from siamtext.net import ModelParams, NetConfig, encode_batch, encode_sentence, init_params
from siamtext.grad import Gradients, backward, finite_difference_grad
from siamtext.loss import LossConfig, batch_loss, contrastive_loss, contrastive_loss_grad, cosine
from siamtext.train import TrainConfig, TrainReport, load_checkpoint, save_checkpoint, train
from siamtext.classify import Metrics, ReferenceSet, build_reference_set, classify, evaluate

__version__ = "0.1.0"
