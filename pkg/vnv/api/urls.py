"""
API URL routing
"""
from django.urls import include, path
from rest_framework.routers import DefaultRouter

from .views import ExperimentRunViewSet

router = DefaultRouter()
router.register(r'experiment-runs', ExperimentRunViewSet, basename='experiment-run')

urlpatterns = [
    path('', include(router.urls)),
]
