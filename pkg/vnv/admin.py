"""
Django Admin configuration for LPPL V&V
"""
from django.contrib import admin
from django.utils.html import format_html

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ['run_id', 'kind', 'status_badge', 'fingerprint', 'runs_ok', 'runs_skipped',
                    'started_at', 'duration_seconds']
    list_filter = ['status', 'kind', 'created_at']
    search_fields = ['run_id', 'fingerprint']
    readonly_fields = ['created_at', 'started_at', 'completed_at']
    date_hierarchy = 'created_at'

    fieldsets = (
        ('Run Information', {
            'fields': ('run_id', 'kind', 'status')
        }),
        ('Configuration', {
            'fields': ('fingerprint', 'config', 'output_dir')
        }),
        ('Results', {
            'fields': ('runs_total', 'runs_ok', 'runs_skipped', 'report', 'errors')
        }),
        ('Timing', {
            'fields': ('started_at', 'completed_at', 'duration_seconds', 'created_at')
        }),
    )

    @admin.display(description='Status')
    def status_badge(self, obj):
        colors = {
            'PENDING': 'orange',
            'RUNNING': 'blue',
            'COMPLETED': 'green',
            'FAILED': 'red',
        }
        return format_html(
            '<span style="background-color: {}; color: white; padding: 3px 10px; border-radius: 3px;">{}</span>',
            colors.get(obj.status, 'gray'),
            obj.get_status_display(),
        )
