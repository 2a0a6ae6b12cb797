"""Standard parts of semialgebraic sets over Q(eps) and good-cell decompositions."""
