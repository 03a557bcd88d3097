import copy

from django.conf import settings


def get_defaults():
    """Return a private copy of the UPLIFT_RANK hyperparameter defaults."""
    return copy.deepcopy(settings.UPLIFT_RANK)


def get_threads():
    return max(1, int(settings.UPLIFT_RANK_THREADS))
