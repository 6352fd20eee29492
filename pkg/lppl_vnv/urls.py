"""
URL configuration for lppl_vnv project.
"""
from django.contrib import admin
from django.urls import include, path

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/', include('vnv.api.urls')),
    path('api-auth/', include('rest_framework.urls')),
]
