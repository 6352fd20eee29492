"""
Audit index of experiment runs

Run artifacts on disk are the source of truth; this table records what was
run, with which config, and how it ended.
"""
from django.db import models


class ExperimentRun(models.Model):
    """Audit trail for each simulate / vnv / compare execution"""

    STATUS_CHOICES = [
        ('PENDING', 'Pending'),
        ('RUNNING', 'Running'),
        ('COMPLETED', 'Completed'),
        ('FAILED', 'Failed'),
    ]

    KIND_CHOICES = [
        ('simulate', 'Simulate'),
        ('vnv', 'Validation experiment'),
        ('compare', 'Algorithm comparison'),
    ]

    run_id = models.CharField(max_length=100, unique=True, db_index=True)
    kind = models.CharField(max_length=20, choices=KIND_CHOICES, default='vnv')
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='PENDING')

    # Configuration
    fingerprint = models.CharField(max_length=16, db_index=True)
    config = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=500, blank=True)

    # Results
    runs_total = models.IntegerField(default=0)
    runs_ok = models.IntegerField(default=0)
    runs_skipped = models.IntegerField(default=0)
    report = models.JSONField(null=True, blank=True)
    errors = models.JSONField(default=list, blank=True)

    # Timing
    started_at = models.DateTimeField(null=True, blank=True)
    completed_at = models.DateTimeField(null=True, blank=True)
    duration_seconds = models.FloatField(null=True, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['-created_at', 'status'], name='vnv_experim_created_6a1f0e_idx'),
        ]

    def __str__(self):
        return f"{self.kind} {self.run_id}: {self.status}"
