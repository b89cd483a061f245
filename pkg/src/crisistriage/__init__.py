"""Crisis-message triage toolkit.

Filters social-media messages for humanitarian informativeness, classifies
informative messages by intent (need/supply) and aid type (food, shelter,
health, WASH), and produces routing reports for humanitarian organizations.
"""

__version__ = "0.1.0"

INTENT_LABELS = ("need", "supply")
AID_LABELS = ("food", "shelter", "health", "wash")
TASKS = ("informative", "intent", "aid")

LABELS_BY_TASK = {
    "informative": ("informative",),
    "intent": INTENT_LABELS,
    "aid": AID_LABELS,
}
