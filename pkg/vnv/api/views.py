"""
API Views for experiment runs (read-only audit index)
"""
from pathlib import Path

from rest_framework import status, viewsets
from rest_framework.decorators import action
from rest_framework.permissions import AllowAny
from rest_framework.response import Response

from vnv.models import ExperimentRun
from vnv.persistence import load_json
from vnv.stats import ReportTable, render_report_table

from .serializers import ExperimentRunSerializer


class ExperimentRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    API endpoint for experiment runs

    list: All runs, newest first (filter with ?status= / ?kind= / ?fingerprint=)
    retrieve: One run by run_id
    report: The persisted report of a completed run, with its text rendering
    """
    queryset = ExperimentRun.objects.all()
    serializer_class = ExperimentRunSerializer
    permission_classes = [AllowAny]
    lookup_field = 'run_id'

    def get_queryset(self):
        queryset = super().get_queryset()
        for field in ('status', 'kind', 'fingerprint'):
            value = self.request.query_params.get(field)
            if value:
                queryset = queryset.filter(**{field: value})
        return queryset

    @action(detail=True, methods=['get'])
    def report(self, request, run_id=None):
        """Report table of a run; falls back to report.json in its run directory"""
        run = self.get_object()
        data = run.report
        if data is None and run.output_dir:
            path = Path(run.output_dir) / 'report.json'
            if path.is_file():
                data = load_json(path)
        if data is None:
            return Response(
                {'error': f'Run {run_id} has no report (status {run.status})'},
                status=status.HTTP_404_NOT_FOUND
            )
        if run.kind == 'compare':
            return Response({'run_id': run_id, 'fingerprint': run.fingerprint, 'comparison': data})
        return Response({
            'run_id': run_id,
            'fingerprint': run.fingerprint,
            'report': data,
            'text': render_report_table(ReportTable.from_dict(data)),
        })
